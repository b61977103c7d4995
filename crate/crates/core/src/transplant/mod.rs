//! Feature transplantation from donor projects: test scanning, organ
//! extraction and integration into a host repository.

mod adapter;
mod donor;
mod integrate;
mod manifest;
mod minilang;
mod organ;

pub use adapter::{module_index, ImportTarget, LanguageAdapter};
pub use donor::{donor_from_files, load_donor, module_graph, scan_donor_tests, split_lines};
pub use integrate::{in_slice, insertion_points, plan_transplant, slice_base, SLICES_DIR};
pub use manifest::{add_local, adapt_manifest, merge_deps, remove_local, ManifestModel, MANIFEST_FILE};
pub use minilang::{brace_delta, braces_balanced, import_of, Minilang};
pub use organ::{extract_organ, slice_closure, Organ};
