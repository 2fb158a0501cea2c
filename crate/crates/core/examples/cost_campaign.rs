//! A small seeded campaign: every algorithm on random shapes, priced with
//! the default cost model and summarized per shape category.
use hegemm::bench::{emit_report, run_emulated_campaign, ReportFormat};
use hegemm::CampaignConfig;

fn main() -> hegemm::Result<()> {
    let cfg = CampaignConfig { cases: 40, seed: 2024, ..CampaignConfig::default() };
    let campaign = run_emulated_campaign(&cfg)?;
    let s = &campaign.summary;
    println!("{} cases ({} resampled), all exact: {}", s.cases, s.resampled, s.all_exact);
    if let Some(share) = s.en_cc_le_hegmm {
        println!("enhanced uses no more ciphertext products than basic in {:.0}% of cases", share * 100.0);
    }
    for r in &s.ratios {
        println!(
            "{:>11} / {:<8} {:>8}: n={:<3} mean {:.2} median {:.2} max {:.2}",
            r.baseline, r.candidate, r.group, r.cases, r.mean, r.median, r.max
        );
    }
    let mut csv = Vec::new();
    emit_report(&campaign, ReportFormat::Csv, &mut csv)?;
    let text = String::from_utf8_lossy(&csv);
    println!("\nfirst CSV rows:");
    for line in text.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
