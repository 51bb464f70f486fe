"""Class activation heatmaps from a saved checkpoint.

Loads the checkpoint written by 03_train_small.py (run that first), picks
one test image per condition, and writes the class evidence map next to
it. Bright regions are where the final conv stage pushed the predicted
class's logit up.
"""

from pathlib import Path

from nanet.checkpoint import load_checkpoint
from nanet.dataset import read_png, write_png
from nanet.gradcam import grad_cam

out_dir = Path("demo_out") / "small"
ckpt_path = out_dir / "model.ckpt"
if not ckpt_path.exists():
    raise SystemExit("no checkpoint found, run 03_train_small.py first")

ckpt = load_checkpoint(ckpt_path)
for cond in ("clean", "gaussian", "saltpepper"):
    src = out_dir / "data" / cond / "M" / "02.png"
    image = read_png(src)
    cam = grad_cam(ckpt, image)  # defaults to the predicted class
    dest = out_dir / f"cam_{cond}_M.png"
    write_png(dest, cam)
    print(f"{cond:10s} heatmap peak {cam.values.max():.2f} -> {dest}")
