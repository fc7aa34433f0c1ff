"""Two-stage hierarchical classifier.

Stage 1 fuses three branch scores (frequency backbone, image backbone,
keypoint descriptors) into a binary authenticity score; samples judged fake
pass the authenticity filter into stage 2, which fuses two image-domain
branches (descriptors + a separate backbone) into a forgery-type
distribution.  Fusion coefficients are softmax-normalized learnable scalars.
Stage 2 deliberately has no frequency-domain branch.
"""

from dataclasses import dataclass, field

import numpy as np

from . import engine as E
from .attention import AttenConfig, attenfusion_forward, init_attenfusion
from .backbone import BackboneConfig, backbone_forward, init_backbone
from .checkpoint import CheckpointError, read_sections, write_sections
from .imaging import PATCH_SIZE, extract_patches
from .keypoints import N_KEYPOINTS, canonical_keypoints
from .sift import DESCRIPTOR_DIM, extract_handcrafted
from .spectral import SpectrumStats, dct2, normalize_spectrum

# canonical forgery-type vocabulary; models store indices into this list
TYPE_ORDER = ("nearest", "bilinear", "checkerboard", "blockdct")

BACKBONE_KEYS = ("stage1.freq", "stage1.img", "stage2.img")
ATTEN_KEYS = ("stage1.freq", "stage1.img", "stage1.sift", "stage2.img", "stage2.sift")
# stage-1 branch order matches the fusion weight vector: (freq, img, sift)
STAGE1_BRANCHES = ("stage1.freq", "stage1.img", "stage1.sift")
# stage-2 branch order: (sift, img)
STAGE2_BRANCHES = ("stage2.sift", "stage2.img")


@dataclass
class FusionWeights:
    w: np.ndarray
    trainable: bool = True

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if not np.all(np.isfinite(self.w)):
            raise ValueError("fusion weights must be finite")

    def coefficients(self):
        e = np.exp(self.w - self.w.max())
        return e / e.sum()


@dataclass
class StagePrediction:
    fused: np.ndarray  # scalar () for stage 1, (M,) for stage 2
    branch_scores: list
    label: int  # stage 1: 1=fake; stage 2: type index


@dataclass
class Prediction:
    is_fake: bool
    s_det: float
    type_index: int = -1
    type_name: str = ""

    @property
    def label(self):
        return f"fake:{self.type_name}" if self.is_fake else "real"


@dataclass
class HierarchicalModel:
    stats: SpectrumStats
    backbone_cfgs: dict
    backbones: dict
    atten_cfgs: dict
    attens: dict
    w1: FusionWeights
    w2: FusionWeights
    type_names: tuple
    tau: float = 0.5
    freq_squash: bool = True

    @property
    def n_types(self):
        return len(self.type_names)

    def parameters(self, group):
        """Flat list of Tensors for one backbone/atten key, stable order."""
        return list(group.values())


def build_model(
    type_names=TYPE_ORDER,
    stats=None,
    widths=(8, 16, 32, 64),
    dim=128,
    head_hidden=64,
    stem_stride=2,
    n_head=4,
    mlp_hidden=256,
    tau=0.5,
    freq_squash=True,
    seed=0,
):
    """Freshly initialized model (stats may be attached later by training)."""
    type_names = tuple(type_names)
    m = len(type_names)
    if m < 2:
        raise ValueError("need at least 2 forgery types")
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0,1)")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x464443]))
    bcfg = {
        "stage1.freq": BackboneConfig(widths, dim, head_hidden, stem_stride, out_dim=1),
        "stage1.img": BackboneConfig(widths, dim, head_hidden, stem_stride, out_dim=1),
        "stage2.img": BackboneConfig(widths, dim, head_hidden, stem_stride, out_dim=m),
    }
    acfg = {
        "stage1.freq": AttenConfig(9, dim, n_head, mlp_hidden, out_dim=1),
        "stage1.img": AttenConfig(9, dim, n_head, mlp_hidden, out_dim=1),
        "stage1.sift": AttenConfig(N_KEYPOINTS, DESCRIPTOR_DIM, n_head, mlp_hidden, out_dim=1),
        "stage2.img": AttenConfig(9, dim, n_head, mlp_hidden, out_dim=m),
        "stage2.sift": AttenConfig(N_KEYPOINTS, DESCRIPTOR_DIM, n_head, mlp_hidden, out_dim=m),
    }
    backbones = {k: init_backbone(bcfg[k], rng) for k in BACKBONE_KEYS}
    attens = {k: init_attenfusion(acfg[k], rng) for k in ATTEN_KEYS}
    if stats is None:
        stats = SpectrumStats(
            mean=np.zeros((PATCH_SIZE, PATCH_SIZE)),
            var=np.ones((PATCH_SIZE, PATCH_SIZE)),
            n_samples=0,
        )
    return HierarchicalModel(
        stats=stats,
        backbone_cfgs=bcfg,
        backbones=backbones,
        atten_cfgs=acfg,
        attens=attens,
        w1=FusionWeights(np.zeros(3)),
        w2=FusionWeights(np.zeros(2)),
        type_names=type_names,
        tau=tau,
        freq_squash=freq_squash,
    )


# ---------------------------------------------------------------------------
# feature preparation


def image_patch_stack(img):
    """(9, 128, 128) pixel patches in canonical order."""
    return np.stack(extract_patches(img).patches)


def freq_patch_stack(img_or_patches, stats, squash=True):
    """Normalized (optionally log-squashed) DCT spectra of the nine patches."""
    if hasattr(img_or_patches, "pixels"):
        patches = image_patch_stack(img_or_patches)
    else:
        patches = np.asarray(img_or_patches)
    out = np.stack([normalize_spectrum(dct2(p), stats) for p in patches])
    if squash:
        out = np.sign(out) * np.log1p(np.abs(out))
    return out


def sift_token_stack(img, keypoints=None):
    return extract_handcrafted(img, keypoints)


# ---------------------------------------------------------------------------
# scoring


def fuse_scores(branch_scores, weights):
    """Softmax(w)-weighted convex combination of branch scores."""
    scores = [np.asarray(s, dtype=np.float64) for s in branch_scores]
    if len(scores) != weights.w.shape[0]:
        raise ValueError(f"{len(scores)} scores vs {weights.w.shape[0]} weights")
    coeffs = weights.coefficients()
    out = coeffs[0] * scores[0]
    for c, s in zip(coeffs[1:], scores[1:]):
        out = out + c * s
    return out


def conv_branch_scores(model, key, patch_stacks):
    """Fused AttenFusion scores for a conv branch over a batch.

    ``patch_stacks``: (B, 9, 128, 128) pixel patches or normalized spectra.
    Returns (B,) for out_dim=1 else (B, M).
    """
    batch = np.asarray(patch_stacks, dtype=np.float64)
    b = batch.shape[0]
    bcfg, acfg = model.backbone_cfgs[key], model.atten_cfgs[key]
    x = E.Tensor(batch.reshape(b * 9, 1, batch.shape[2], batch.shape[3]))
    tokens, _ = backbone_forward(x, model.backbones[key], bcfg, training=False)
    out = []
    for i in range(b):
        rows = E.narrow(tokens, 0, i * 9, 9)
        fused, _ = attenfusion_forward(rows, model.attens[key], acfg, training=False)
        out.append(fused.data.reshape(-1))
    out = np.stack(out)
    return out[:, 0] if acfg.out_dim == 1 else out


def sift_branch_scores(model, key, token_stacks):
    """Fused scores of a descriptor-token branch; tokens (B, 68, 128)."""
    acfg = model.atten_cfgs[key]
    out = []
    for tok in token_stacks:
        fused, _ = attenfusion_forward(E.Tensor(tok), model.attens[key], acfg, training=False)
        out.append(fused.data.reshape(-1))
    out = np.stack(out)
    return out[:, 0] if acfg.out_dim == 1 else out


def stage1_branch_scores(model, img, keypoints=None):
    """(S_freq, S_img, S_sift) for one image."""
    patches = image_patch_stack(img)
    freq = freq_patch_stack(patches, model.stats, model.freq_squash)
    s_freq = conv_branch_scores(model, "stage1.freq", freq[None])[0]
    s_img = conv_branch_scores(model, "stage1.img", patches[None])[0]
    tokens = sift_token_stack(img, keypoints)
    s_sift = sift_branch_scores(model, "stage1.sift", tokens[None])[0]
    return np.array([s_freq, s_img, s_sift])


def stage2_branch_scores(model, img, keypoints=None):
    """(S_sift, S_img) type distributions for one image."""
    tokens = sift_token_stack(img, keypoints)
    s_sift = sift_branch_scores(model, "stage2.sift", tokens[None])[0]
    patches = image_patch_stack(img)
    s_img = conv_branch_scores(model, "stage2.img", patches[None])[0]
    return [s_sift, s_img]


def stage1_detect(img, model, keypoints=None):
    scores = stage1_branch_scores(model, img, keypoints)
    fused = fuse_scores(list(scores), model.w1)
    return StagePrediction(
        fused=np.asarray(fused), branch_scores=list(scores), label=int(fused >= model.tau)
    )


def authenticity_filter(samples, model, keypoints=None):
    """Order-preserving subset of samples stage 1 labels fake."""
    return [s for s in samples if stage1_detect(s, model, keypoints).label == 1]


def stage2_type(img, model, keypoints=None):
    scores = stage2_branch_scores(model, img, keypoints)
    fused = fuse_scores(scores, model.w2)
    # argmax with lowest-index tie break (numpy argmax already does this)
    return StagePrediction(fused=fused, branch_scores=scores, label=int(np.argmax(fused)))


def predict(img, model, keypoints=None):
    det = stage1_detect(img, model, keypoints)
    if det.label == 0:
        return Prediction(is_fake=False, s_det=float(det.fused))
    typ = stage2_type(img, model, keypoints)
    return Prediction(
        is_fake=True,
        s_det=float(det.fused),
        type_index=typ.label,
        type_name=model.type_names[typ.label],
    )


# ---------------------------------------------------------------------------
# persistence


def model_sections(model):
    """Ordered name -> array mapping covering every tensor in the model."""
    sections = {}
    sections["spectral.stats.mean"] = model.stats.mean
    sections["spectral.stats.var"] = model.stats.var
    sections["spectral.stats.count"] = np.asarray(float(model.stats.n_samples))
    for key in BACKBONE_KEYS:
        for name, t in model.backbones[key].items():
            sections[f"{key}.backbone.{name}"] = t.data
    for key in ATTEN_KEYS:
        for name, t in model.attens[key].items():
            sections[f"{key}.atten.{name}"] = t.data
    sections["stage1.fusion.w"] = model.w1.w
    sections["stage2.fusion.w"] = model.w2.w
    cfg = model.backbone_cfgs["stage1.img"]
    acfg = model.atten_cfgs["stage1.img"]
    sections["meta.backbone.widths"] = np.asarray(cfg.widths, dtype=np.float64)
    sections["meta.backbone.dim"] = np.asarray(float(cfg.dim))
    sections["meta.backbone.head_hidden"] = np.asarray(float(cfg.head_hidden))
    sections["meta.backbone.stem_stride"] = np.asarray(float(cfg.stem_stride))
    sections["meta.atten.heads"] = np.asarray(float(acfg.n_head))
    sections["meta.atten.mlp_hidden"] = np.asarray(float(acfg.mlp_hidden))
    sections["meta.type_ids"] = np.asarray(
        [TYPE_ORDER.index(t) for t in model.type_names], dtype=np.float64
    )
    sections["meta.tau"] = np.asarray(float(model.tau))
    sections["meta.freq_squash"] = np.asarray(float(model.freq_squash))
    return sections


def save_model(model, path):
    write_sections(path, model_sections(model))


def load_model(path):
    sec = read_sections(path)
    try:
        type_names = tuple(TYPE_ORDER[int(i)] for i in sec["meta.type_ids"])
        model = build_model(
            type_names=type_names,
            widths=tuple(int(v) for v in sec["meta.backbone.widths"]),
            dim=int(sec["meta.backbone.dim"]),
            head_hidden=int(sec["meta.backbone.head_hidden"]),
            stem_stride=int(sec["meta.backbone.stem_stride"]),
            n_head=int(sec["meta.atten.heads"]),
            mlp_hidden=int(sec["meta.atten.mlp_hidden"]),
            tau=float(sec["meta.tau"]),
            freq_squash=bool(sec["meta.freq_squash"]),
        )
        model.stats = SpectrumStats(
            mean=sec["spectral.stats.mean"].astype(np.float64),
            var=sec["spectral.stats.var"].astype(np.float64),
            n_samples=int(sec["spectral.stats.count"]),
        )
        for key in BACKBONE_KEYS:
            for name, t in model.backbones[key].items():
                _load_into(t, sec, f"{key}.backbone.{name}")
        for key in ATTEN_KEYS:
            for name, t in model.attens[key].items():
                _load_into(t, sec, f"{key}.atten.{name}")
        model.w1 = FusionWeights(sec["stage1.fusion.w"].astype(np.float64))
        model.w2 = FusionWeights(sec["stage2.fusion.w"].astype(np.float64))
    except KeyError as exc:
        raise CheckpointError(f"checkpoint missing section {exc}") from None
    return model


def _load_into(tensor, sections, name):
    arr = sections[name].astype(np.float64)
    if arr.shape != tensor.data.shape:
        raise CheckpointError(
            f"section {name}: shape {arr.shape} does not match model {tensor.data.shape}"
        )
    tensor.data = arr


def assert_stage2_image_only(model):
    """Structural invariant: no frequency-domain branch feeds stage 2."""
    stage2 = [k for k in list(model.backbones) + list(model.attens) if k.startswith("stage2")]
    bad = [k for k in stage2 if "freq" in k]
    if bad:
        raise AssertionError(f"stage 2 must not contain frequency branches: {bad}")
