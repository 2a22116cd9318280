//! Runs the general-intensity and targeted-cheater experiments on the
//! default synthetic trace and prints one line per variant.
//!
//!   cargo run --release --example experiments -- [seed]

use crisim::adversary::TargetSelector;
use crisim::report::DisturbanceSummary;
use crisim::sweep::{intensity_sweep, targeted_sweep, Sweep};
use crisim::{Execution, ScenarioConfig};

fn pct(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:+.2}%"))
}

fn print_sweep(sweep: &Sweep) {
    let b = &sweep.baseline;
    println!(
        "baseline: mean REP {:.4} PB {:.4} TC {:.2}, skipped {}",
        b.mean_reputation(),
        b.mean_payback(),
        b.mean_task_count(),
        b.skipped_tasks
    );
    for s in &sweep.summaries {
        print_summary(s);
    }
}

fn print_summary(s: &DisturbanceSummary) {
    println!(
        "{:>16}: DT {:.3}% ({:.3} C) | pop REP {} PB {} TC {}",
        s.variant,
        s.mean_dt_disturbance_pct,
        s.mean_abs_dt_shift,
        pct(s.population_rep.change_pct),
        pct(s.population_pb.change_pct),
        pct(s.population_tc.change_pct),
    );
    for t in &s.targets {
        println!(
            "{:>16}  target {}: REP {:.3}->{:.3} ({}) PB {:.3}->{:.3} ({}) TC {}->{} ({})",
            "",
            t.user,
            t.rep.baseline,
            t.rep.variant,
            pct(t.rep.change_pct),
            t.pb.baseline,
            t.pb.variant,
            pct(t.pb.change_pct),
            t.tc.baseline,
            t.tc.variant,
            pct(t.tc.change_pct),
        );
    }
}

fn main() -> crisim::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let config = ScenarioConfig {
        seed,
        ..ScenarioConfig::default()
    };
    let start = std::time::Instant::now();
    print_sweep(&intensity_sweep(
        &config,
        &[0.10, 0.15, 0.20],
        Execution::Parallel,
    )?);
    print_sweep(&targeted_sweep(
        &config,
        &[
            TargetSelector::TopR,
            TargetSelector::TopP,
            TargetSelector::TopC,
        ],
        &[1.0, 0.5],
        Execution::Parallel,
    )?);
    println!("elapsed {:.2?}", start.elapsed());
    Ok(())
}
