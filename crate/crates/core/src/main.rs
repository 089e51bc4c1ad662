//! CLI front end: converge | riemann | ap-check | plot.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use kinetic_dg::config::ExperimentConfig;
use kinetic_dg::harness::{self, fmt_sci};

fn print_usage() {
    eprintln!("Usage: kinetic-dg <command> ...");
    eprintln!();
    eprintln!("  converge <config.ini>   accuracy study over a doubling mesh list -> converge.csv");
    eprintln!("  riemann  <config.ini>   single run, cell-center profiles -> profile.csv");
    eprintln!("                          (reference.csv too when reference_n is set)");
    eprintln!("  ap-check <config.ini>   kinetic vs limiting-LDG gap at small eps -> ap_check.csv");
    eprintln!("  plot <csv> [<csv> ...]  write a gnuplot script next to the first CSV");
    eprintln!();
    eprintln!("Config keys are documented in the README. Set KINETIC_DG_THREADS to");
    eprintln!("override the worker thread count.");
}

fn init_threads() {
    if let Ok(v) = std::env::var("KINETIC_DG_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run() -> Result<(), String> {
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 2 {
        print_usage();
        return Err("missing command".into());
    }
    init_threads();
    match args[1].as_str() {
        "converge" => {
            let path = args.get(2).ok_or("converge needs a config path")?;
            let cfg = ExperimentConfig::from_file(Path::new(path)).map_err(|e| e.to_string())?;
            let table = harness::run_converge(&cfg).map_err(|e| e.to_string())?;
            println!("N,L1_rho,order_rho,L1_j,order_j");
            for r in &table.rows {
                let fo = |o: Option<f64>| o.map(fmt_sci).unwrap_or_else(|| "--".into());
                println!(
                    "{},{},{},{},{}",
                    r.n,
                    fmt_sci(r.l1_rho),
                    fo(r.order_rho),
                    fmt_sci(r.l1_j),
                    fo(r.order_j)
                );
            }
            println!("wrote {}", table.csv_path.display());
            Ok(())
        }
        "riemann" => {
            let path = args.get(2).ok_or("riemann needs a config path")?;
            let cfg = ExperimentConfig::from_file(Path::new(path)).map_err(|e| e.to_string())?;
            let rep = harness::run_riemann(&cfg).map_err(|e| e.to_string())?;
            println!("wrote {}", rep.profile_path.display());
            if let Some(p) = &rep.reference_path {
                println!("wrote {}", p.display());
            }
            if let Some(d) = rep.l1_vs_reference {
                println!("L1(rho) coarse vs reference = {}", fmt_sci(d));
            }
            if let (Some(er), Some(ej)) = (rep.l1_exact_rho, rep.l1_exact_j) {
                println!("L1(rho) vs exact = {}", fmt_sci(er));
                println!("L1(j)   vs exact = {}", fmt_sci(ej));
            }
            Ok(())
        }
        "ap-check" => {
            let path = args.get(2).ok_or("ap-check needs a config path")?;
            let cfg = ExperimentConfig::from_file(Path::new(path)).map_err(|e| e.to_string())?;
            let rep = harness::run_ap_check(&cfg).map_err(|e| e.to_string())?;
            println!("L1(rho) kinetic vs LDG = {}", fmt_sci(rep.l1_rho_diff));
            println!("L1(j vs q)             = {}", fmt_sci(rep.l1_j_diff));
            println!("|rho|_L1               = {}", fmt_sci(rep.rho_norm));
            println!(
                "relative gap           = {}",
                fmt_sci(rep.l1_rho_diff / rep.rho_norm.max(f64::MIN_POSITIVE))
            );
            if let Some(p) = &rep.csv_path {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        "plot" => {
            if args.len() < 3 {
                return Err("plot needs at least one CSV path".into());
            }
            let csvs: Vec<PathBuf> = args[2..].iter().map(PathBuf::from).collect();
            let out = csvs[0]
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join("plot.gp");
            let written = harness::emit_plot_script(&csvs, &out).map_err(|e| e.to_string())?;
            println!("wrote {}", written.display());
            Ok(())
        }
        "--help" | "-h" | "help" => {
            print_usage();
            Ok(())
        }
        other => {
            print_usage();
            Err(format!("unknown command {other}"))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
