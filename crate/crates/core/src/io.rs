//! Matrix and block-plan files.
//!
//! Text matrices start with a `rows cols` line followed by one line of
//! whitespace-separated integers per row; `#` starts a comment. Files ending
//! in `.json` hold `{"rows": .., "cols": .., "data": [..]}` with `data` in
//! row-major order.

use std::io::Write;
use std::path::Path;

use crate::algos::BlockPlan;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.split('#').next().unwrap_or("").trim()))
        .filter(|(_, line)| !line.is_empty())
}

fn parse_numbers<T: std::str::FromStr>(line: &str, lineno: usize) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| tok.parse().map_err(|_| Error::Parse(format!("line {lineno}: cannot parse {tok:?}"))))
        .collect()
}

pub fn parse_text_matrix(text: &str) -> Result<Matrix> {
    let mut lines = content_lines(text);
    let (lineno, header) = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let dims: Vec<usize> = parse_numbers(header, lineno)?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!("line {lineno}: expected \"rows cols\", got {header:?}")));
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (lineno, line) in lines {
        let row: Vec<i64> = parse_numbers(line, lineno)?;
        if row.len() != cols {
            return Err(Error::Parse(format!("line {lineno}: expected {cols} values, got {}", row.len())));
        }
        data.extend(row);
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse(format!("expected {rows} rows, got {seen}")));
    }
    Matrix::new(rows, cols, data).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)?;
    if is_json(path) {
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    } else {
        parse_text_matrix(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

pub fn write_matrix_text<W: Write>(m: &Matrix, mut out: W) -> Result<()> {
    write!(out, "{m}")?;
    Ok(())
}

pub fn write_matrix(m: &Matrix, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    if is_json(path) {
        let mut file = file;
        serde_json::to_writer(&mut file, m)?;
        writeln!(file)?;
        file.flush()?;
        Ok(())
    } else {
        write_matrix_text(m, file)
    }
}

/// Reads custom cuts: three lines of block sizes (rows of `A`, inner
/// dimension, columns of `B`), or the JSON form of [`BlockPlan`].
pub fn read_block_plan(path: &Path) -> Result<BlockPlan> {
    let text = std::fs::read_to_string(path)?;
    let plan: BlockPlan = if is_json(path) {
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
    } else {
        let cuts: Vec<Vec<usize>> =
            content_lines(&text).map(|(n, line)| parse_numbers(line, n)).collect::<Result<_>>()?;
        let [rows, inner, cols]: [Vec<usize>; 3] =
            cuts.try_into().map_err(|_| Error::Parse(format!("{}: expected three lines of cuts", path.display())))?;
        BlockPlan { row_cuts: rows, inner_cuts: inner, col_cuts: cols }
    };
    BlockPlan::custom(plan.row_cuts, plan.inner_cuts, plan.col_cuts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_text_with_comments() {
        let m = parse_text_matrix("# a\n2 3\n1 2 3 # first\n\n-4 5 6\n").unwrap();
        assert_eq!(m, Matrix::from_rows(&[[1, 2, 3], [-4, 5, 6]]));
    }

    #[test]
    fn rejects_bad_text() {
        for bad in ["", "2\n1 2", "2 2\n1 2\n3", "2 2\n1 2\n3 x", "1 2\n1 2\n3 4", "0 2\n"] {
            assert!(matches!(parse_text_matrix(bad), Err(Error::Parse(_))), "{bad:?}");
        }
    }

    #[test]
    fn file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::from_fn(3, 4, |r, c| r as i64 * 10 - c as i64);
        for name in ["m.txt", "m.json", "m"] {
            let path = dir.path().join(name);
            write_matrix(&m, &path).unwrap();
            assert_eq!(read_matrix(&path).unwrap(), m);
        }
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"rows":2,"cols":2,"data":[1,2,3]}"#).unwrap();
        assert!(matches!(read_matrix(&bad), Err(Error::Parse(_))));
    }

    #[test]
    fn block_plan_files() {
        let dir = tempfile::tempdir().unwrap();
        let txt = dir.path().join("cuts.txt");
        std::fs::write(&txt, "4 3\n7\n2 2 2\n").unwrap();
        let plan = read_block_plan(&txt).unwrap();
        assert_eq!(plan.dims(), (7, 7, 6));
        let json = dir.path().join("cuts.json");
        std::fs::write(&json, serde_json::to_string(&plan).unwrap()).unwrap();
        assert_eq!(read_block_plan(&json).unwrap(), plan);
        std::fs::write(&txt, "4 3\n7\n").unwrap();
        assert!(read_block_plan(&txt).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = Matrix::random(rows, cols, i64::MIN / 2, i64::MAX / 2, &mut rng);
            let mut buf = Vec::new();
            write_matrix_text(&m, &mut buf).unwrap();
            prop_assert_eq!(parse_text_matrix(std::str::from_utf8(&buf).unwrap()).unwrap(), m);
        }
    }
}
