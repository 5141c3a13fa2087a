"""The four detection metrics on a tiny score set small enough to check by
eye.  Higher scores mean "more in-distribution"."""

from mcdd import ScoreSet, aupr, auroc, detection_accuracy, tnr_at_tpr

scores = ScoreSet(id_scores=[0.9, 0.8, 0.7, 0.6, 0.3], ood_scores=[0.75, 0.4, 0.2, 0.1])
# 20 ID/OOD pairs; the ID score wins in 16 of them
print(f"AUROC              {auroc(scores):.4f}  (16/20 = 0.80)")
print(f"AUPR               {aupr(scores):.4f}")
# the largest threshold keeping 85% of ID samples is 0.3, which rejects 0.2 and 0.1
print(f"TNR at TPR 85%     {tnr_at_tpr(scores):.4f}  (2/4)")
print(f"detection accuracy {detection_accuracy(scores):.4f}")
