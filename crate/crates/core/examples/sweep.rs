//! Run a parameter grid from a TOML config and write plot data.

use mixsparse::harness::{emit_plot_data, sweep, ExperimentConfig, OutputFormat, SweepAxis};

const CONFIG: &str = r#"
n = 40
k = 2
sigma = 0.0
trials = 5
seed = 3
pipeline = "noiseless"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::from_toml_str(CONFIG)?;
    let axes = [
        SweepAxis { name: "k".into(), values: vec![1.0, 2.0, 3.0] },
        SweepAxis { name: "n".into(), values: vec![40.0, 80.0] },
    ];
    let result = sweep(&config, &axes)?;
    for (i, cell) in result.cells.iter().enumerate() {
        println!(
            "k = {} n = {}: {} queries on average, {} failed",
            cell.coords[0],
            cell.coords[1],
            result.value(i, "queries_mean").unwrap(),
            result.value(i, "failed").unwrap()
        );
    }
    let path = std::env::temp_dir().join("sweep.json");
    emit_plot_data(&result, OutputFormat::Json, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
