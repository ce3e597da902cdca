//! Entropy-based starting-point selection and PCA over food feature vectors.

mod eigen;
mod entropy;
mod pca;
mod plot;

pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use entropy::{
    binary_entropy, build_frequency_table, select_starting_points, MoleculeFrequencyTable, SelectedMolecule,
    SelectedMolecules, SelectionError, MAX_STARTING_POINTS,
};
pub use pca::{pca, pca_rows, PcaError, PcaResult};
pub use plot::{emit_plot_data, PlotError, PlotFiles, PLOT_CSV, PLOT_SVG};
