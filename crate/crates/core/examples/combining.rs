//! Confidence-weighted and equal combining of buffered frames and word
//! distributions, plus the synonym segments used by SC retransmissions.

use semharq::codec::WordDistribution;
use semharq::harq::{combine_decision, combine_equal, combine_weighted, combining_weights, synonym_segment, CombineRule};
use semharq::tensor::Tensor;
use semharq::Result;

fn main() -> Result<()> {
    let p = [0.9, 0.3, 0.6];
    println!("confidences {p:?} -> weights {:?}", combining_weights(&p)?);
    println!("scaled by 10 -> weights {:?}", combining_weights(&p.map(|x| x * 10.0))?);

    let frames = [
        Tensor::new(vec![1, 2], vec![1.0, 0.0])?,
        Tensor::new(vec![1, 2], vec![0.0, 1.0])?,
        Tensor::new(vec![1, 2], vec![1.0, 1.0])?,
    ];
    let refs: Vec<&Tensor> = frames.iter().collect();
    println!("weighted frame {:?}", combine_weighted(&refs, &p)?.data());
    println!("equal frame    {:?}", combine_equal(&refs)?.data());

    let dists = [
        WordDistribution::new(Tensor::new(vec![1, 3], vec![0.7, 0.2, 0.1])?)?,
        WordDistribution::new(Tensor::new(vec![1, 3], vec![0.1, 0.8, 0.1])?)?,
    ];
    let drefs: Vec<&WordDistribution> = dists.iter().collect();
    for rule in [CombineRule::Weighted, CombineRule::Equal] {
        let d = combine_decision(&drefs, &[0.9, 0.2], rule)?;
        println!("{:<8} decision combining {:?}", rule.as_str(), d.probs().data());
    }

    // Retransmission m of M-1 substitutes synonyms only inside its segment.
    for total in 1..=3 {
        let segments: Vec<_> = (1..=total).map(|m| synonym_segment(7, m, total)).collect();
        println!("7 words over {total} retransmission(s): {segments:?}");
    }
    Ok(())
}
