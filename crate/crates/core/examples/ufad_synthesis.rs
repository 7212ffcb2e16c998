//! Runs the UFAD synthesis and prints per-subsystem refinement traces.

use std::time::Instant;

use compref::refinement::{synthesize, RefineOptions};
use compref::ufad::{ufad_problem, UfadParams, UfadSettings};

fn main() {
    tracing_subscriber::fmt().with_env_filter(tracing_subscriber::EnvFilter::from_default_env()).with_writer(std::io::stderr).init();
    let mut params = UfadParams::default();
    if let Ok(doors) = std::env::var("DOORS") {
        // e.g. DOORS=1-3,4-6,7-8 ; every other grid adjacency becomes a wall
        let doors: Vec<(usize, usize)> = doors
            .split(',')
            .map(|d| {
                let (a, b) = d.split_once('-').unwrap();
                (a.parse::<usize>().unwrap() - 1, b.parse::<usize>().unwrap() - 1)
            })
            .collect();
        for l in params.topology.links.iter_mut() {
            let door = doors.iter().any(|&(a, b)| (a, b) == (l.0, l.1) || (b, a) == (l.0, l.1));
            l.2 = if door { compref::ufad::Contact::Door } else { compref::ufad::Contact::Wall };
        }
    }
    if let Ok(m) = std::env::var("MIX") {
        let m: f64 = m.parse().unwrap();
        params.room6_mix = [m, 1.0 - m];
    }
    let problem = ufad_problem::<f64>(&params, &UfadSettings::default()).expect("scenario");
    let start = Instant::now();
    let abstractions = problem.abstractions().expect("abstractions");
    let opts = RefineOptions { max_depth: std::env::args().nth(1).map_or(6, |a| a.parse().unwrap()), ..Default::default() };
    let only: Option<usize> = std::env::args().nth(2).map(|a| a.parse().unwrap());
    for abs in abstractions.clone().into_iter().filter(|a| only.is_none_or(|o| a.spec().id == o)) {
        match compref::refinement::refine_subsystem(abs, &opts) {
            Ok(r) => println!("S{}: {:?} evals {}", r.abstraction.spec().id + 1, r.refined_steps(), r.evaluations),
            Err(e) => println!("{e}"),
        }
    }
    if only.is_some() { return; }
    match synthesize(abstractions, &opts) {
        Ok(results) => {
            let mut total = 0;
            for r in &results {
                total += r.evaluations;
                let steps: Vec<String> = r.refined_steps().iter().map(|k| format!("σ{k}")).collect();
                println!(
                    "S{}: {} refinements [{}], {} evaluations, |V0| = {}",
                    r.abstraction.spec().id + 1,
                    r.trace.len(),
                    steps.join(" "),
                    r.evaluations,
                    r.valid.step(0).len()
                );
            }
            println!("total evaluations: {total}");
        }
        Err(e) => println!("synthesis failed: {e}"),
    }
    println!("wall time: {:.2?}", start.elapsed());
}
