//! Weighs competing explanations for sets of symptoms.

use sp_core::inference::probabilities;
use sp_core::{build_alignments, parse_corpus, parse_store, SearchParams};

fn main() {
    let store = parse_store(include_str!("../fixtures/diagnosis.sp")).unwrap();
    let cases = parse_corpus(include_str!("../fixtures/diagnosis.new")).unwrap();
    for symptoms in &cases.news {
        println!("{}", symptoms.names().collect::<Vec<_>>().join(" "));
        let ranked = build_alignments(symptoms, &store, &SearchParams::default());
        let report = probabilities(&ranked).unwrap();
        for (s, p) in ranked.iter().zip(&report.entries).take(5) {
            let explains: Vec<&str> = s.alignment.matched_new_indices().iter().map(|&i| symptoms.name(i)).collect();
            let rows = s.alignment.old_pattern_ids().join("+");
            println!(
                "  {:<12} CD {:>6.2}  P {:.3e}  P_rel {:.3}  explains {}",
                if rows.is_empty() { "(none)" } else { &rows },
                s.score.cd,
                p.absolute,
                p.relative,
                explains.join(" ")
            );
        }
    }
}
