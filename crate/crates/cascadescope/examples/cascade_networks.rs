//! Retweet cascade graphs at the nine benchmark time points, with density
//! and top-degree statistics and a Kamada-Kawai layout SVG for one of them.
//!
//! ```bash
//! cargo run --example cascade_networks
//! ```

use cascadescope::cascade::layout::kamada_kawai_layout;
use cascadescope::cascade::{
    build_cascade, collect_events, graph_stats, SelectionRule, BENCHMARK_TIME_POINTS,
};
use cascadescope::ingest::{parse_archive_reader, Strictness};
use cascadescope::synth::{generate_archive, SynthConfig};

fn main() {
    let cfg = SynthConfig {
        n_tweets: 8_000,
        ..SynthConfig::default()
    };
    let parsed =
        parse_archive_reader(generate_archive(&cfg).as_bytes(), Strictness::Lenient).unwrap();
    let (events, _) = collect_events(&parsed.records);

    println!(
        "{:<4} {:>12} {:>10} {:>7} {:>5} {:>5} {:>5}",
        "G", "time pt (s)", "density", "nodes", "1st", "2nd", "3rd"
    );
    let mut last = None;
    for (i, &tp) in BENCHMARK_TIME_POINTS.iter().enumerate() {
        let label = format!("G{}", i + 1);
        let graph = build_cascade(&events, tp, 300, SelectionRule::Nearest, &label).unwrap();
        let stats = graph_stats(&graph).unwrap();
        let degs: Vec<u32> = stats.top_degrees.iter().map(|(d, _)| *d).collect();
        println!(
            "{label:<4} {tp:>12} {:>10.6} {:>7} {:>5} {:>5} {:>5}",
            stats.density,
            stats.n_nodes,
            degs.first().copied().unwrap_or(0),
            degs.get(1).copied().unwrap_or(0),
            degs.get(2).copied().unwrap_or(0),
        );
        last = Some(graph);
    }

    let graph = last.unwrap();
    let layout = kamada_kawai_layout(&graph, 60, 5);
    println!(
        "\n{} layout: {} components, stress {:.4}",
        graph.label, layout.components, layout.stress
    );
    let dir = std::env::temp_dir().join("cascadescope-examples");
    std::fs::create_dir_all(&dir).unwrap();
    let svg = dir.join("cascade_g9.svg");
    let mut degree = vec![0u32; graph.nodes.len()];
    for e in graph.simple_edges() {
        degree[e.source as usize] += 1;
        degree[e.target as usize] += 1;
    }
    let edge_pairs: Vec<(u32, u32)> = graph.edges.iter().map(|e| (e.source, e.target)).collect();
    cascadescope::plot::graph_svg(&layout.positions, &edge_pairs, &degree, &svg).unwrap();
    println!("wrote {}", svg.display());
}
