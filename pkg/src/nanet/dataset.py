"""Synthetic Morse-code image dataset: rendering, noise injection, assembly.

Letters are drawn as a horizontal row of glyphs on a square canvas, filled
circles for dots and axis-aligned rectangles for dashes, with per-instance
jitter (rotation, translation, scale). Rasterization is analytic: each pixel
center is mapped through the inverse jitter transform and tested against the
glyph shapes, so coverage statistics follow the continuous geometry closely.

Noise is injected at the canonical 512x512 resolution when the dataset is
built; consumers resize afterwards. Every image is generated from its own
counter-based PRNG stream keyed by (seed, letter, instance[, condition]),
which makes generation order-independent and exactly reproducible.
"""

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path, PurePosixPath

import numpy as np
from PIL import Image

from .errors import IoFailure, ShapeMismatch, SpecOverflow
from .morse import LETTERS, MorseSymbol, encode_letter, letter_index

CONDITIONS = ("clean", "uniform", "gaussian", "saltpepper")
NOISY_CONDITIONS = CONDITIONS[1:]

DEFAULT_NOISE = {
    "uniform": ("uniform", {"amplitude": 0.3}),
    "gaussian": ("gaussian", {"sigma": 0.2}),
    "saltpepper": ("saltpepper", {"p": 0.1}),
}


@dataclass(frozen=True)
class ImageBuffer:
    """Grayscale image: row-major float values in [0, 1]."""

    height: int
    width: int
    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.shape != (self.height, self.width):
            raise ShapeMismatch(f"ImageBuffer: values shape {v.shape} vs ({self.height}, {self.width})")
        if v.size and (float(v.min()) < 0.0 or float(v.max()) > 1.0):
            raise ValueError("ImageBuffer: values outside [0, 1]")

    @classmethod
    def from_array(cls, arr):
        a = np.ascontiguousarray(arr, dtype=np.float32)
        return cls(a.shape[0], a.shape[1], a)

    def copy(self):
        return ImageBuffer(self.height, self.width, self.values.copy())


@dataclass(frozen=True)
class Jitter:
    max_rotation_deg: float = 15.0
    max_translation_px: float = 20.0
    scale_range: tuple = (0.8, 1.2)


@dataclass(frozen=True)
class RenderSpec:
    """Glyph geometry in canvas pixels plus the jitter envelope.

    Defaults keep the widest 4-symbol layout inside the canvas at maximum
    scale (4 dashes plus 3 gaps: 426 px, times 1.2 is 511.2 <= 512), so
    in-distribution jitter can never clip.
    """

    canvas: int = 512
    dot_radius: float = 20.0
    dash_width: float = 84.0
    dash_height: float = 40.0
    symbol_gap: float = 30.0
    foreground: float = 0.0
    background: float = 1.0
    jitter: Jitter = Jitter()

    def validate(self):
        if self.foreground == self.background:
            raise SpecOverflow("RenderSpec: foreground equals background")
        if not 0.0 <= self.foreground <= 1.0 or not 0.0 <= self.background <= 1.0:
            raise SpecOverflow("RenderSpec: intensities must lie in [0, 1]")
        widest = max(2.0 * self.dot_radius, self.dash_width)
        row = 4.0 * widest + 3.0 * self.symbol_gap
        if row * max(self.jitter.scale_range) > self.canvas:
            raise SpecOverflow(
                f"RenderSpec: 4-symbol row {row:.1f}px exceeds canvas {self.canvas} at max scale"
            )

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["jitter"]["scale_range"] = list(self.jitter.scale_range)
        return d

    @classmethod
    def from_dict(cls, d):
        j = d.get("jitter", {})
        jitter = Jitter(
            max_rotation_deg=j.get("max_rotation_deg", 15.0),
            max_translation_px=j.get("max_translation_px", 20.0),
            scale_range=tuple(j.get("scale_range", (0.8, 1.2))),
        )
        keys = ("canvas", "dot_radius", "dash_width", "dash_height", "symbol_gap", "foreground", "background")
        return cls(**{k: d[k] for k in keys if k in d}, jitter=jitter)


@dataclass(frozen=True)
class NoiseSpec:
    """One noise condition. Fields irrelevant to `kind` are ignored."""

    kind: str
    amplitude: float = 0.0
    sigma: float = 0.0
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in CONDITIONS:
            raise ValueError(f"NoiseSpec: unknown kind {self.kind!r}")
        if self.amplitude < 0 or self.sigma < 0 or not 0.0 <= self.p <= 1.0:
            raise ValueError("NoiseSpec: amplitude/sigma must be >= 0 and p in [0, 1]")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def default_noise_specs(uniform_amp=0.3, gauss_sigma=0.2, sp_p=0.1):
    return {
        "uniform": NoiseSpec("uniform", amplitude=uniform_amp),
        "gaussian": NoiseSpec("gaussian", sigma=gauss_sigma),
        "saltpepper": NoiseSpec("saltpepper", p=sp_p),
    }


def _layout(seq, spec):
    """Per-symbol (kind, center_x, half_w, half_h) in unjittered row coords."""
    widths = []
    for sym in seq.symbols:
        widths.append(2.0 * spec.dot_radius if sym is MorseSymbol.DOT else spec.dash_width)
    total_w = sum(widths) + spec.symbol_gap * (len(widths) - 1)
    half_h = max(
        max((spec.dot_radius if s is MorseSymbol.DOT else spec.dash_height / 2.0) for s in seq.symbols),
        0.0,
    )
    cells = []
    x = -total_w / 2.0
    for sym, w in zip(seq.symbols, widths):
        cells.append((sym, x + w / 2.0))
        x += w + spec.symbol_gap
    return cells, total_w / 2.0, half_h


def render(seq, spec: RenderSpec, rng) -> ImageBuffer:
    """Rasterize a Morse sequence with jitter drawn from `rng`.

    Draw order is fixed (rotation, tx, ty, scale) so a given stream state
    always produces the same image. Raises SpecOverflow when the jittered
    bounding box would leave the canvas.
    """
    spec.validate()
    j = spec.jitter
    theta = np.deg2rad(rng.uniform(-j.max_rotation_deg, j.max_rotation_deg))
    tx = rng.uniform(-j.max_translation_px, j.max_translation_px)
    ty = rng.uniform(-j.max_translation_px, j.max_translation_px)
    scale = rng.uniform(j.scale_range[0], j.scale_range[1])

    cells, half_w, half_h = _layout(seq, spec)
    cos, sin = np.cos(theta), np.sin(theta)
    half = spec.canvas / 2.0
    for sx in (-half_w, half_w):
        for sy in (-half_h, half_h):
            px = scale * (cos * sx - sin * sy) + tx
            py = scale * (sin * sx + cos * sy) + ty
            if abs(px) > half or abs(py) > half:
                raise SpecOverflow(
                    f"render: jittered layout for {seq.letter!r} exceeds canvas "
                    f"(corner at {px:+.1f},{py:+.1f}, half-extent {half:.1f})"
                )

    # inverse-map pixel centers into glyph coordinates
    ax = np.arange(spec.canvas, dtype=np.float64) + 0.5 - half
    gx, gy = np.meshgrid(ax, ax)
    ux = (cos * (gx - tx) + sin * (gy - ty)) / scale
    uy = (-sin * (gx - tx) + cos * (gy - ty)) / scale

    mask = np.zeros((spec.canvas, spec.canvas), dtype=bool)
    for sym, cx in cells:
        if sym is MorseSymbol.DOT:
            mask |= (ux - cx) ** 2 + uy**2 <= spec.dot_radius**2
        else:
            mask |= (np.abs(ux - cx) <= spec.dash_width / 2.0) & (np.abs(uy) <= spec.dash_height / 2.0)

    img = np.full((spec.canvas, spec.canvas), spec.background, dtype=np.float32)
    img[mask] = spec.foreground
    return ImageBuffer(spec.canvas, spec.canvas, img)


def apply_noise(img: ImageBuffer, spec: NoiseSpec, rng) -> ImageBuffer:
    """Corrupt a copy of `img` according to `spec`; the input is not touched.

    Stream contract (for reproducibility and replay): uniform and gaussian
    each consume one full-shape draw; saltpepper consumes two full-shape
    uniform draws, the first for the corruption mask, the second for the
    salt-vs-pepper choice (< 0.5 is pepper).
    """
    v = img.values
    if spec.kind == "clean":
        out = v.copy()
    elif spec.kind == "uniform":
        out = v + rng.uniform(-spec.amplitude, spec.amplitude, v.shape)
        np.clip(out, 0.0, 1.0, out=out)
    elif spec.kind == "gaussian":
        out = v + rng.normal(0.0, spec.sigma, v.shape)
        np.clip(out, 0.0, 1.0, out=out)
    else:
        hit = rng.random(v.shape) < spec.p
        salt = rng.random(v.shape) >= 0.5
        out = v.copy()
        out[hit] = salt[hit].astype(v.dtype)
    return ImageBuffer(img.height, img.width, out.astype(np.float32, copy=False))


def augment_rotate(img: ImageBuffer, angle, fill=1.0) -> ImageBuffer:
    """Rotate about the image center with bilinear sampling.

    Pixels whose source location falls outside the frame get `fill`
    (the background intensity). Dimensions are preserved.
    """
    h, w = img.height, img.width
    theta = np.deg2rad(float(angle))
    cos, sin = np.cos(theta), np.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    jj = np.arange(w, dtype=np.float64) - cx
    ii = np.arange(h, dtype=np.float64) - cy
    gx, gy = np.meshgrid(jj, ii)
    xs = cos * gx + sin * gy + cx
    ys = -sin * gx + cos * gy + cy
    out = _bilinear_gather(img.values, ys, xs, fill)
    return ImageBuffer(h, w, out)


def resize(img: ImageBuffer, out_h, out_w) -> ImageBuffer:
    """Bilinear resampling on half-pixel-aligned centers."""
    if out_h < 1 or out_w < 1:
        raise ShapeMismatch(f"resize: target {out_h}x{out_w}")
    h, w = img.height, img.width
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    gx, gy = np.meshgrid(xs, ys)
    out = _bilinear_gather(img.values, gy, gx, fill=None)
    return ImageBuffer(out_h, out_w, out)


def _bilinear_gather(v, ys, xs, fill):
    """Sample image `v` at float coords; `fill=None` clamps to the border
    instead of filling (appropriate for resize, which never leaves it).
    """
    h, w = v.shape
    if fill is not None:
        outside = (xs < -0.5) | (xs > w - 0.5) | (ys < -0.5) | (ys > h - 0.5)
    xc = np.clip(xs, 0.0, w - 1.0)
    yc = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xc).astype(np.intp)
    y0 = np.floor(yc).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0
    top = v[y0, x0] * (1.0 - fx) + v[y0, x1] * fx
    bot = v[y1, x0] * (1.0 - fx) + v[y1, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    if fill is not None:
        out[outside] = fill
    out = out.astype(np.float32)
    np.clip(out, 0.0, 1.0, out=out)
    return out


def write_png(path, img: ImageBuffer):
    """8-bit grayscale PNG; v_byte = round(v * 255) after clamping."""
    arr = np.round(np.clip(img.values, 0.0, 1.0) * 255.0).astype(np.uint8)
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(arr, mode="L").save(str(path), format="PNG")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def read_png(path) -> ImageBuffer:
    """Inverse of write_png: v_float = v_byte / 255."""
    try:
        with Image.open(str(path)) as im:
            arr = np.asarray(im.convert("L"), dtype=np.float32) / 255.0
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    return ImageBuffer.from_array(arr)


@dataclass(frozen=True)
class ManifestItem:
    letter: str
    instance: int
    split: str
    condition: str
    path: str


@dataclass
class DatasetManifest:
    seed: int
    per_letter: int
    test_per_letter: int
    render_spec: RenderSpec
    noise_specs: dict
    items: list
    root: str = None  # directory the item paths are relative to; not serialized

    def train_items(self):
        return [it for it in self.items if it.split == "train"]

    def test_items(self, condition):
        return [it for it in self.items if it.split == "test" and it.condition == condition]

    def to_dict(self):
        return {
            "seed": self.seed,
            "per_letter": self.per_letter,
            "test_per_letter": self.test_per_letter,
            "render_spec": self.render_spec.to_dict(),
            "noise_specs": {k: v.to_dict() for k, v in sorted(self.noise_specs.items())},
            "items": [dataclasses.asdict(it) for it in self.items],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            seed=d["seed"],
            per_letter=d["per_letter"],
            test_per_letter=d["test_per_letter"],
            render_spec=RenderSpec.from_dict(d["render_spec"]),
            noise_specs={k: NoiseSpec.from_dict(v) for k, v in d["noise_specs"].items()},
            items=[ManifestItem(**it) for it in d["items"]],
        )

    def save(self, path):
        try:
            Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")
        except OSError as e:
            raise IoFailure(f"cannot write manifest {path}: {e}") from e

    @classmethod
    def load(cls, path):
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise IoFailure(f"cannot read manifest {path}: {e}") from e
        m = cls.from_dict(d)
        m.root = str(Path(path).parent)
        return m


def _image_rng(*key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def build_dataset(spec: RenderSpec, noise, seed, out_dir, per_letter=40, test_per_letter=10) -> DatasetManifest:
    """Render the full letter corpus and write it under `out_dir`.

    Layout: <out_dir>/<condition>/<letter>/<instance>.png plus manifest.json.
    Per letter, instances [0, per_letter - test_per_letter) are the clean
    training split; the rest are held out for testing and additionally
    corrupted once per noisy condition. Each image derives from its own
    Philox stream keyed by (seed, letter_index, instance[, condition_index]),
    so the whole dataset is a pure function of the arguments.
    """
    spec.validate()
    if noise is None:
        noise = default_noise_specs()
    if not 0 <= test_per_letter <= per_letter:
        raise ValueError(f"test_per_letter {test_per_letter} outside [0, {per_letter}]")
    out = Path(out_dir)
    n_train = per_letter - test_per_letter
    items = []
    for letter in LETTERS:
        li = letter_index(letter)
        seq = encode_letter(letter)
        for inst in range(per_letter):
            img = render(seq, spec, _image_rng(seed, li, inst))
            rel = PurePosixPath("clean") / letter / f"{inst:02d}.png"
            write_png(out / rel, img)
            split = "train" if inst < n_train else "test"
            items.append(ManifestItem(letter, inst, split, "clean", str(rel)))
            if split == "test":
                for cond in NOISY_CONDITIONS:
                    ci = CONDITIONS.index(cond)
                    noisy = apply_noise(img, noise[cond], _image_rng(seed, li, inst, ci))
                    rel_n = PurePosixPath(cond) / letter / f"{inst:02d}.png"
                    write_png(out / rel_n, noisy)
                    items.append(ManifestItem(letter, inst, "test", cond, str(rel_n)))
    manifest = DatasetManifest(seed, per_letter, test_per_letter, spec, dict(noise), items, root=str(out))
    manifest.save(out / "manifest.json")
    return manifest
