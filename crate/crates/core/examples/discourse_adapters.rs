//! Converts discourse treebank annotations into probing datasets: PDTB
//! relations are routed by section and filtered by label frequency, RST trees
//! are binarized and every internal node becomes one instance.
//!
//!     cargo run --example discourse_adapters

use discoprobe::fixture::{attribution_tree, pdtb_fixture, rst_fixture};
use discoprobe::synth::{adapt_pdtb, adapt_rst, binarize_rst, extract_rst_instances, remove_connective, RstLabelMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = pdtb_fixture();
    let adapted = adapt_pdtb(&records)?;
    println!("PDTB: {} records, {} outside sections 2-23", records.len(), adapted.dropped_out_of_range);
    for ds in [&adapted.explicit, &adapted.implicit] {
        println!(
            "  {:<7} {:>3}/{:>2}/{:>2} rows, labels {:?}",
            ds.name,
            ds.splits.train.len(),
            ds.splits.dev.len(),
            ds.splits.test.len(),
            ds.labels.names
        );
    }
    println!("  rare explicit labels removed: {:?}", adapted.removed_explicit);
    println!("  {:?}", remove_connective("But it remains to be seen.", "but"));

    let tree = attribution_tree();
    println!("\nRST tree: {tree:?}");
    for node in extract_rst_instances(&binarize_rst(&tree)?, 3, RstLabelMode::NuclearityRelation)? {
        println!("  left {:?} right {:?} -> {}", node.left, node.right, node.label);
    }

    let docs = rst_fixture(20, 1);
    let dev: Vec<String> = docs.iter().filter(|d| d.split == "train").take(3).map(|d| d.doc_id.clone()).collect();
    let ds = adapt_rst(&docs, &dev, RstLabelMode::NuclearityRelation)?;
    println!(
        "\nRST-DT fixture: {}/{}/{} node instances, {} labels",
        ds.splits.train.len(),
        ds.splits.dev.len(),
        ds.splits.test.len(),
        ds.labels.len()
    );
    Ok(())
}
