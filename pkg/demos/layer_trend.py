"""Train free guidance logits on one scene for 0..3 SGA layers and watch
the error inside the textureless band.

Takes around half a minute.
"""
from gastereo.trainer import TrainConfig, make_scene, train

scene = make_scene(64, 96, seed=0, band_width=16, d_max=16)
for layers in range(4):
    res = train(scene, TrainConfig(sga_layers=layers, steps=60), workers=2)
    first, last = res.history[0], res.history[-1]
    print(f"layers={layers} loss {first.loss:.3f} -> {last.loss:.3f}  "
          f"band epe={res.ambiguous.epe:.3f}  overall epe={res.metrics.epe:.3f}")

res = train(scene, TrainConfig(sga_layers=1, use_lga=True, steps=60), workers=2)
print(f"layers=1 +lga band epe={res.ambiguous.epe:.3f}")
