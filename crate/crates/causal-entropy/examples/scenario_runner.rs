//! Driving the library through scenario files, the same path the binary
//! uses: load a bundled fixture, override parts of it, and render the
//! report in each output format.

use causal_entropy::scenario::{self, exit_code, render, OutputFormat, Overrides};

fn main() {
    for (name, text) in scenario::list_examples() {
        let spec: serde_json::Value = serde_json::from_str(text).unwrap();
        println!(
            "{name}: {}",
            spec["description"].as_str().unwrap_or("(no description)")
        );
    }
    println!();

    let device = scenario::example("device").unwrap();

    let report = scenario::run_text(device, &Overrides::default()).unwrap();
    println!("--- device, table format ---");
    println!("{}", render(&report, OutputFormat::Table).unwrap());

    // same scenario, different task, machine-readable output
    let symmetric = scenario::run_text(
        device,
        &Overrides {
            task: Some("symmetric-pir".into()),
            ..Default::default()
        },
    )
    .unwrap();
    println!("--- device, symmetric task, json format ---");
    println!("{}", render(&symmetric, OutputFormat::Json).unwrap());

    // the infeasible parity fixture maps to exit code 2
    let parity = scenario::example("parity").unwrap();
    let result = scenario::run_text(parity, &Overrides::default());
    println!("--- parity fixture ---");
    println!("exit code {}", exit_code(&result));
    let report = result.unwrap();
    println!("{}", render(&report, OutputFormat::Table).unwrap());
}
