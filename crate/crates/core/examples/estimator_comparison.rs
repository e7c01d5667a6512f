//! Error of EM, the method of moments and the single-Gaussian fit as the means separate.

use mixsparse::harness::{emit_plot_data, estimator_comparison, ComparisonOptions, OutputFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let separations = [0.0, 0.5, 1.0, 2.0, 4.0];
    let result = estimator_comparison(&separations, 1000, 50, 1.0, 0, &ComparisonOptions::default())?;
    println!("{:>10} {:>8} {:>8} {:>8}", "separation", "em", "mom", "single");
    for (i, d) in separations.iter().enumerate() {
        let v = |c| result.value(i, c).unwrap();
        println!("{d:>10} {:>8.4} {:>8.4} {:>8.4}", v("em_error_mean"), v("mom_error_mean"), v("single_error_mean"));
    }
    let path = std::env::temp_dir().join("estimators.csv");
    emit_plot_data(&result, OutputFormat::Csv, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
