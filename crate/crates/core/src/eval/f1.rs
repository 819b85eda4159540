/// Micro- and macro-averaged F1 for single-label predictions over
/// `num_classes` classes. Classes with no support and no predictions count
/// as F1 = 0 in the macro average.
pub fn f1_scores(predictions: &[usize], labels: &[usize], num_classes: usize) -> (f64, f64) {
    assert_eq!(
        predictions.len(),
        labels.len(),
        "prediction/label length mismatch"
    );
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p == l {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[l] += 1;
        }
    }
    let f1 = |tp: usize, fp: usize, fn_: usize| {
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let micro = f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let macro_ = if num_classes == 0 {
        0.0
    } else {
        (0..num_classes)
            .map(|c| f1(tp[c], fp[c], fn_[c]))
            .sum::<f64>()
            / num_classes as f64
    };
    (micro, macro_)
}
