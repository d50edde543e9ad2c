use alloc::vec;
use alloc::vec::Vec;

/// WSS_k: WSS_1 = <1>; WSS_k = WSS_{k-1} ++ <k> ++ WSS_{k-1}.
fn weight_spread(k: u32) -> Vec<u32> {
    let mut seq = vec![1u32];
    for level in 2..=k {
        let mut next = seq.clone();
        next.push(level);
        next.extend_from_slice(&seq);
        seq = next;
    }
    seq
}

/// One smoothed round-robin round for equal-sized packets. `weights[f]` is
/// flow f's per-round packet count; the returned sequence lists flow
/// indices in service order. Term t of WSS_k stands for the bit worth
/// 2^(k-t), and every flow whose weight has that bit set is emitted in
/// ascending index order, so flow f appears exactly weights[f] times.
/// Zero-weight flows are omitted.
pub fn srr_sequence(weights: &[u64]) -> Vec<usize> {
    let max = weights.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Vec::new();
    }
    let k = 64 - max.leading_zeros();
    let mut out = Vec::new();
    for &t in &weight_spread(k) {
        let bit = 1u64 << (k - t);
        for (f, &w) in weights.iter().enumerate() {
            if w & bit != 0 {
                out.push(f);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_slot_example() {
        // weights (f1..f4) = (1,4,8,3); indices here are zero-based
        let seq = srr_sequence(&[1, 4, 8, 3]);
        let expected = vec![2, 1, 2, 3, 2, 1, 2, 0, 3, 2, 1, 2, 3, 2, 1, 2];
        assert_eq!(seq, expected);
    }

    #[test]
    fn trivial_rounds() {
        assert_eq!(srr_sequence(&[1]), vec![0]);
        assert_eq!(srr_sequence(&[1, 1]), vec![0, 1]);
        assert!(srr_sequence(&[]).is_empty());
        assert_eq!(srr_sequence(&[0, 2]), vec![1, 1]);
    }

    #[test]
    fn each_flow_appears_weight_times() {
        let weights = [5u64, 9, 1, 14, 0, 7];
        let seq = srr_sequence(&weights);
        for (f, &w) in weights.iter().enumerate() {
            let n = seq.iter().filter(|&&x| x == f).count() as u64;
            assert_eq!(n, w, "flow {f}");
        }
        assert_eq!(seq.len() as u64, weights.iter().sum::<u64>());
    }

    #[test]
    fn spread_is_smoother_than_blocked_service() {
        // the max-weight flow's appearances are spread: with weights
        // (1,4,8,3) the largest gap between consecutive f3 slots is 3,
        // versus 9 if each flow sent its whole allocation contiguously.
        let seq = srr_sequence(&[1, 4, 8, 3]);
        let pos: Vec<usize> = seq
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f == 2)
            .map(|(i, _)| i)
            .collect();
        let max_gap = pos.windows(2).map(|w| w[1] - w[0]).max().unwrap();
        assert!(max_gap <= 3);
    }
}
