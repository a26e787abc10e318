//! Instance generation, certified oracles, the experiment runner and plotting.

pub mod experiment;
pub mod instance;
pub mod oracle;
pub mod plot;

pub use experiment::{run_experiment, EfficiencyModel, ExperimentConfig, ExperimentSummary, SolverSel};
pub use instance::{gen_instance, InstanceSpec, GENERATOR};
pub use oracle::{kkt_check, projection_oracle, reference_lasso, Certificate};
pub use plot::{emit_plot, read_bundle, render_svg, PlotSeries};

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
