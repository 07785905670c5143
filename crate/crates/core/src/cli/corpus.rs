use crate::graphio::{enumerate_connected, load_graph6, write_graph6, Graph};

use super::config::{CorpusConfig, ExperimentConfig};
use super::table::ResultTable;
use super::CliError;

/// Enumerated graphs for each node count, then any graph6 file contents.
pub fn load_corpus(corpus: Option<&CorpusConfig>, default_nodes: &[usize]) -> Result<Vec<Graph>, CliError> {
    let fallback = CorpusConfig { nodes: default_nodes.to_vec(), ..CorpusConfig::default() };
    let c = corpus.unwrap_or(&fallback);
    let mut graphs = Vec::new();
    for &n in &c.nodes {
        graphs.extend(enumerate_connected(n).map_err(|e| CliError::Corpus(format!("enumerating n = {n}: {e}")))?);
    }
    if let Some(path) = &c.graph6 {
        let range = c.lines.map(|[a, b]| a..b);
        graphs.extend(load_graph6(path, range).map_err(|e| CliError::Corpus(format!("{}: {e}", path.display())))?);
    }
    if graphs.is_empty() {
        return Err(CliError::Corpus("corpus is empty".into()));
    }
    Ok(graphs)
}

pub(super) fn graph6_string(g: &Graph) -> Result<String, CliError> {
    let bytes = write_graph6(g).map_err(|e| CliError::Corpus(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Corpus(e.to_string()))
}

/// graph6 lines for every connected graph on `enumerate.nodes` nodes, plus a
/// table listing them.
pub fn cmd_enumerate(config: &ExperimentConfig) -> Result<(String, ResultTable), CliError> {
    let n = config.enumerate.nodes;
    let graphs = enumerate_connected(n).map_err(|e| CliError::Corpus(e.to_string()))?;
    let mut table = ResultTable::new(&["index", "graph6", "edges"]);
    let mut lines = String::new();
    for (i, g) in graphs.iter().enumerate() {
        let code = graph6_string(g)?;
        lines.push_str(&code);
        lines.push('\n');
        table.push(vec![i.into(), code.into(), g.edges().len().into()]);
    }
    table.set_meta("nodes", n);
    table.set_meta("count", graphs.len());
    Ok((lines, table))
}
