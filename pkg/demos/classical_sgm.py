"""Classical matching on a synthetic pair: census costs, winner-take-all,
box filtering and four-direction SGM, scored against ground truth."""
import numpy as np

from gastereo import DisparityMap
from gastereo.classical import FilterKernel, SgmParams, cost_filter, sgm
from gastereo.head import evaluate
from gastereo.matching import MatchConfig, build_cost_volume
from gastereo.trainer import make_scene

scene = make_scene(48, 80, seed=1, band_width=12, d_max=16)
cost = build_cost_volume(scene.left, scene.right, MatchConfig(d_max=16))
H, W = scene.gt.shape


def wta(v):
    return DisparityMap(np.argmin(v[..., 0], axis=2).astype(float))


volumes = {
    "raw census": cost,
    "5x5 box filter": cost_filter(cost, FilterKernel.uniform(H, W, 5)),
    "sgm p1=0.1 p2=0.5": sgm(cost, SgmParams()),
}
for name, v in volumes.items():
    m = evaluate(wta(v), scene.gt)
    amb = evaluate(wta(v), scene.gt, region=scene.ambiguous_mask)
    print(f"{name:<18} epe={m.epe:.3f} >3px={m.error_rate[3.0]:.3f}  band epe={amb.epe:.3f}")
