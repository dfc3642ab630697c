//! Bundled fixture loading.

use std::path::PathBuf;

use gridflex::expansion::ExpansionOptions;
use gridflex::flexload::{load_profiles, FlexSpec};
use gridflex::harness::Scenario;
use gridflex::netcase::{parse_case, Network};
use ndarray::Array2;

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(repo_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn case(rel: &str) -> Network {
    parse_case(&read(rel)).unwrap_or_else(|e| panic!("{rel}: {e}")).network
}

pub fn profiles(rel: &str, network: &Network) -> Array2<f64> {
    load_profiles(&read(rel), network).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn flex(rel: &str) -> FlexSpec {
    FlexSpec::from_json(&read(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn scenario(case_rel: &str, profile_rel: &str, flex_rel: Option<&str>, options: ExpansionOptions) -> Scenario {
    let network = case(case_rel);
    let base = profiles(profile_rel, &network);
    let flex = flex_rel.map(flex).unwrap_or_default();
    Scenario { network, base, flex, options }
}
