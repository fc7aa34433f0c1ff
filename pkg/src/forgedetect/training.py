"""Two-stage training pipeline: per-branch Adam training under the blended
patch/fused loss, authenticity-filtered stage-2 training, gradient-descent
fitting of the softmax fusion weights on the validation split, and
deterministic evaluation with TSV artifacts.

Branches train sequentially and independently; fusion weights are fit last
on cached branch scores.  Everything is deterministic given (data, config):
fixed per-branch RNG streams drive init and shuffling.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine as E
from .attention import AttenConfig, attenfusion_forward, init_attenfusion
from .backbone import BackboneConfig, backbone_forward, init_backbone
from .hierarchy import (
    FusionWeights,
    build_model,
    conv_branch_scores,
    freq_patch_stack,
    fuse_scores,
    sift_branch_scores,
)
from .imaging import PATCH_SIZE, Image, load_pnm, patch_offsets
from .losses import LossReport, binary_losses, loss_report, multiclass_losses, total_loss
from .sift import extract_handcrafted


class DataError(ValueError):
    """Dataset violates a training precondition (single class, starvation...)."""


@dataclass
class TrainConfig:
    alpha: float = 0.6
    lr_backbone: float = 1e-4
    lr_attenfusion: float = 1e-5
    lr_fusion: float = 1e-2  # fusion-weight gradient descent step
    epochs_stage1: int = 2
    epochs_stage2: int = 12
    batch_size: int = 4
    seed: int = 42
    clamp_eps: float = 1e-7
    widths: tuple = (8, 16, 32, 64)
    dim: int = 128
    head_hidden: int = 64
    stem_stride: int = 2
    n_head: int = 4
    mlp_hidden: int = 256
    tau: float = 0.5
    freq_squash: bool = True
    stage2_true_fakes: bool = False  # ablation switch: skip the stage-1 filter

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0,1]")
        for lr in (self.lr_backbone, self.lr_attenfusion, self.lr_fusion):
            if lr <= 0:
                raise ValueError("learning rates must be positive")
        if self.batch_size < 1 or self.epochs_stage1 < 1 or self.epochs_stage2 < 1:
            raise ValueError("batch size and epoch counts must be >= 1")


# ---------------------------------------------------------------------------
# dataset handling


@dataclass
class Sample:
    sid: str
    pixels: np.ndarray  # float32 to keep the corpus in memory
    binary: int  # 0 real, 1 fake
    type_index: int  # -1 for real


@dataclass
class Dataset:
    root: Path
    splits: dict  # split name -> list[Sample]
    type_names: tuple


def load_dataset(root):
    """Read a generated corpus (labels.tsv + manifest.txt + PGM tree)."""
    root = Path(root)
    labels_path = root / "labels.tsv"
    manifest_path = root / "manifest.txt"
    if not labels_path.is_file():
        raise DataError(f"dataset at {root} is missing labels.tsv")
    if not manifest_path.is_file():
        raise DataError(f"dataset at {root} is missing manifest.txt")
    manifest = {}
    for line in manifest_path.read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            manifest[k.strip()] = v.strip()
    type_names = tuple(manifest.get("types", "").split(","))
    if type_names == ("",):
        raise DataError("manifest.txt has no types entry")
    splits = {"train": [], "val": [], "test": []}
    for lineno, line in enumerate(labels_path.read_text().splitlines(), 1):
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"labels.tsv line {lineno}: expected 3 columns")
        rel, binary, tname = parts
        split = rel.split("/", 1)[0]
        if split not in splits:
            raise DataError(f"labels.tsv line {lineno}: unknown split {split!r}")
        img = load_pnm(root / rel)
        t_idx = type_names.index(tname) if tname != "none" else -1
        splits[split].append(
            Sample(sid=rel, pixels=img.pixels.astype(np.float32),
                   binary=int(binary), type_index=t_idx)
        )
    return Dataset(root=root, splits=splits, type_names=type_names)


def _patch_stack(pixels):
    p = np.asarray(pixels, dtype=np.float64)
    return np.stack([p[r : r + PATCH_SIZE, c : c + PATCH_SIZE]
                     for r, c in patch_offsets(*p.shape)])


class FeatureCache:
    """Caches the handcrafted descriptor tokens (the only expensive reuse)."""

    def __init__(self):
        self._sift = {}

    def sift(self, sample):
        tok = self._sift.get(sample.sid)
        if tok is None:
            img = Image(pixels=sample.pixels.astype(np.float64), source_id=sample.sid)
            tok = extract_handcrafted(img).astype(np.float32)
            self._sift[sample.sid] = tok
        return tok.astype(np.float64)


# ---------------------------------------------------------------------------
# batched branch forwards (training mode: token heads + backbone head active)


def _conv_forward_batch(backbone, bcfg, atten, acfg, inputs):
    """inputs (B,9,H,W) -> (fused (B,out), per-token (B*9,out), head (B*9,out))."""
    b = inputs.shape[0]
    x = E.Tensor(inputs.reshape(b * 9, 1, inputs.shape[2], inputs.shape[3]))
    tokens, head_logits = backbone_forward(x, backbone, bcfg, training=True)
    squish = E.sigmoid if acfg.out_dim == 1 else E.softmax
    head_probs = squish(head_logits)
    fused_rows, tok_rows = [], []
    for i in range(b):
        rows = E.narrow(tokens, 0, 9 * i, 9)
        f, pt = attenfusion_forward(rows, atten, acfg, training=True)
        fused_rows.append(f)
        tok_rows.append(pt)
    return E.concat(fused_rows, axis=0), E.concat(tok_rows, axis=0), head_probs


def _sift_forward_batch(atten, acfg, token_list):
    fused_rows, tok_rows = [], []
    for tok in token_list:
        f, pt = attenfusion_forward(E.Tensor(tok), atten, acfg, training=True)
        fused_rows.append(f)
        tok_rows.append(pt)
    return E.concat(fused_rows, axis=0), E.concat(tok_rows, axis=0)


def _train_loop(forward, labels, param_groups, cfg, rng, epochs, binary):
    """Generic minibatch loop; ``forward(idx)`` yields (fused, patch_terms(y))."""
    opt = E.Adam(param_groups)
    labels = np.asarray(labels)
    n = len(labels)
    history = []
    loss_fn = binary_losses if binary else multiclass_losses
    for _ in range(epochs):
        perm = rng.permutation(n)
        sums = np.zeros(3)
        nb = 0
        for s in range(0, n, cfg.batch_size):
            idx = perm[s : s + cfg.batch_size]
            y = labels[idx]
            fused, patch_terms = forward(idx, y)
            l_fus, l_pat = loss_fn(fused, y, patch_terms, cfg.clamp_eps)
            tot = total_loss(l_pat, l_fus, cfg.alpha)
            opt.zero_grad()
            E.backward(tot)
            opt.step()
            sums += (tot.item(), l_pat.item(), l_fus.item())
            nb += 1
        history.append(LossReport(total=sums[0] / nb, patch=sums[1] / nb,
                                  fused=sums[2] / nb, alpha=cfg.alpha))
    return history


def _branch_rng(cfg, tag):
    return np.random.default_rng(np.random.SeedSequence([int(cfg.seed), int(tag)]))


def _conv_branch_trainer(backbone, bcfg, atten, acfg, samples, build_inputs):
    def forward(idx, y):
        inputs = np.stack([build_inputs(samples[i]) for i in idx])
        fused, per_tok, head_probs = _conv_forward_batch(backbone, bcfg, atten, acfg, inputs)
        yrep = np.repeat(y, 9)
        return fused, [(per_tok, yrep), (head_probs, yrep)]

    return forward


def _sift_branch_trainer(atten, acfg, samples, cache):
    def forward(idx, y):
        tokens = [cache.sift(samples[i]) for i in idx]
        fused, per_tok = _sift_forward_batch(atten, acfg, tokens)
        return fused, [(per_tok, np.repeat(y, tokens[0].shape[0]))]

    return forward


# ---------------------------------------------------------------------------
# stage training


def train_stage1(dataset, cfg, cache=None):
    """Fit spectrum stats on train reals, then train the three stage-1
    branches independently.  Returns (model, per-branch loss histories)."""
    cache = cache or FeatureCache()
    train = dataset.splits["train"]
    binaries = np.array([s.binary for s in train])
    if len(set(binaries.tolist())) < 2:
        raise DataError("training split contains a single class")

    def real_patches():
        for s in train:
            if s.binary == 0:
                yield from _patch_stack(s.pixels)

    from .spectral import fit_spectrum_stats

    stats = fit_spectrum_stats(real_patches())
    model = build_model(
        type_names=dataset.type_names, stats=stats, widths=cfg.widths, dim=cfg.dim,
        head_hidden=cfg.head_hidden, stem_stride=cfg.stem_stride, n_head=cfg.n_head,
        mlp_hidden=cfg.mlp_hidden, tau=cfg.tau, freq_squash=cfg.freq_squash,
        seed=cfg.seed,
    )
    histories = {}

    def freq_inputs(s):
        return freq_patch_stack(_patch_stack(s.pixels), model.stats, model.freq_squash)

    for tag, key, trainer in (
        (101, "stage1.freq",
         _conv_branch_trainer(model.backbones["stage1.freq"], model.backbone_cfgs["stage1.freq"],
                              model.attens["stage1.freq"], model.atten_cfgs["stage1.freq"],
                              train, freq_inputs)),
        (102, "stage1.img",
         _conv_branch_trainer(model.backbones["stage1.img"], model.backbone_cfgs["stage1.img"],
                              model.attens["stage1.img"], model.atten_cfgs["stage1.img"],
                              train, lambda s: _patch_stack(s.pixels))),
        (103, "stage1.sift",
         _sift_branch_trainer(model.attens["stage1.sift"], model.atten_cfgs["stage1.sift"],
                              train, cache)),
    ):
        groups = [(list(model.attens[key].values()), cfg.lr_attenfusion)]
        if key in model.backbones:
            groups.insert(0, (list(model.backbones[key].values()), cfg.lr_backbone))
        histories[key] = _train_loop(trainer, binaries, groups, cfg,
                                     _branch_rng(cfg, tag), cfg.epochs_stage1, binary=True)
    return model, histories


def stage2_training_set(dataset, model, cfg, cache=None):
    """Stage-2 train samples: true fakes the stage-1 detector labels fake
    (the authenticity filter); predicted-real fakes are dropped, and reals
    never enter (no ground-truth type exists for a false positive)."""
    cache = cache or FeatureCache()
    fakes = [s for s in dataset.splits["train"] if s.binary == 1]
    if cfg.stage2_true_fakes:
        return fakes
    s1 = stage1_score_table(model, fakes, cache)
    fused = fuse_scores([s1[:, 0], s1[:, 1], s1[:, 2]], model.w1)
    return [s for s, f in zip(fakes, fused) if f >= model.tau]


def train_stage2(dataset, model, cfg, cache=None):
    cache = cache or FeatureCache()
    chosen = stage2_training_set(dataset, model, cfg, cache)
    m = model.n_types
    if len(chosen) < m * 10:
        raise DataError(
            f"stage-2 data starvation: filter kept {len(chosen)} samples, need >= {m * 10}"
        )
    labels = np.array([s.type_index for s in chosen])
    histories = {}
    for tag, key in ((201, "stage2.sift"), (202, "stage2.img")):
        if key == "stage2.img":
            trainer = _conv_branch_trainer(
                model.backbones[key], model.backbone_cfgs[key],
                model.attens[key], model.atten_cfgs[key],
                chosen, lambda s: _patch_stack(s.pixels))
            groups = [(list(model.backbones[key].values()), cfg.lr_backbone),
                      (list(model.attens[key].values()), cfg.lr_attenfusion)]
        else:
            trainer = _sift_branch_trainer(model.attens[key], model.atten_cfgs[key],
                                           chosen, cache)
            groups = [(list(model.attens[key].values()), cfg.lr_attenfusion)]
        histories[key] = _train_loop(trainer, labels, groups, cfg,
                                     _branch_rng(cfg, tag), cfg.epochs_stage2, binary=False)
    return histories


# ---------------------------------------------------------------------------
# fusion-weight fitting (full-batch gradient descent on cached scores)


def _fit_weights(score_arrays, labels, binary, lr, clamp=1e-7,
                 steps_per_round=50, max_rounds=20, rel_tol=1e-5):
    """Gradient descent on softmax-weighted fused loss; returns (w, loss log).

    The returned w is the best-loss iterate seen, so the final fused loss
    never exceeds the w=0 starting loss.
    """
    k = len(score_arrays)
    labels = np.asarray(labels)
    consts = [E.Tensor(np.asarray(s, dtype=np.float64).reshape(len(labels), -1))
              for s in score_arrays]
    w = E.Tensor(np.zeros(k), requires_grad=True)

    def fused_loss():
        c = E.softmax(E.reshape(w, (1, k)))
        acc = E.mul(consts[0], E.narrow(c, 1, 0, 1))
        for i in range(1, k):
            acc = E.add(acc, E.mul(consts[i], E.narrow(c, 1, i, 1)))
        if binary:
            return E.bce(acc, labels.astype(np.float64).reshape(-1, 1), clamp)
        return E.cross_entropy(acc, labels, clamp)

    log = [fused_loss().item()]
    best = (log[0], w.data.copy())
    for _ in range(max_rounds):
        for _ in range(steps_per_round):
            loss = fused_loss()
            w.zero_grad()
            E.backward(loss)
            w.data = w.data - lr * w.grad
            cur = fused_loss().item()
            if cur < best[0]:
                best = (cur, w.data.copy())
        log.append(fused_loss().item())
        if abs(log[-2] - log[-1]) < rel_tol * max(1.0, abs(log[-2])):
            break
    return best[1], log


def fit_fusion_weights(val_samples, model, cfg, cache=None,
                       fit_stage1=True, fit_stage2=True):
    """Fit stage-1 then stage-2 softmax fusion weights on the validation
    split; updates the model in place and returns the loss logs."""
    cache = cache or FeatureCache()
    if not val_samples:
        raise DataError("validation split is empty")
    binaries = np.array([s.binary for s in val_samples])
    s1 = stage1_score_table(model, val_samples, cache)
    log1 = []
    if fit_stage1:
        w1, log1 = _fit_weights([s1[:, 0], s1[:, 1], s1[:, 2]], binaries,
                                binary=True, lr=cfg.lr_fusion, clamp=cfg.clamp_eps)
        model.w1 = FusionWeights(w1)
    log2 = []
    if fit_stage2:
        fused1 = fuse_scores([s1[:, 0], s1[:, 1], s1[:, 2]], model.w1)
        routed = [s for s, f in zip(val_samples, fused1)
                  if s.binary == 1 and f >= model.tau]
        if routed:
            s2 = stage2_score_table(model, routed, cache)
            w2, log2 = _fit_weights([s2["stage2.sift"], s2["stage2.img"]],
                                    np.array([s.type_index for s in routed]),
                                    binary=False, lr=cfg.lr_fusion, clamp=cfg.clamp_eps)
            model.w2 = FusionWeights(w2)
    return {"stage1": log1, "stage2": log2}


def train_pipeline(dataset, cfg):
    """Full recipe: stage-1 branches, stage-1 fusion, stage-2 branches,
    stage-2 fusion.  Returns (model, report dict)."""
    cache = FeatureCache()
    model, hist1 = train_stage1(dataset, cfg, cache)
    logs = fit_fusion_weights(dataset.splits["val"], model, cfg, cache, fit_stage2=False)
    hist2 = train_stage2(dataset, model, cfg, cache)
    logs2 = fit_fusion_weights(dataset.splits["val"], model, cfg, cache, fit_stage1=False)
    return model, {
        "stage1": hist1,
        "stage2": hist2,
        "fusion": {"stage1": logs["stage1"], "stage2": logs2["stage2"]},
    }


# ---------------------------------------------------------------------------
# batched scoring tables


def stage1_score_table(model, samples, cache, chunk=8):
    """(n,3) stage-1 branch scores (freq, img, sift) over samples."""
    n = len(samples)
    out = np.zeros((n, 3))
    for s in range(0, n, chunk):
        group = samples[s : s + chunk]
        patches = np.stack([_patch_stack(g.pixels) for g in group])
        freq = np.stack([freq_patch_stack(p, model.stats, model.freq_squash)
                         for p in patches])
        out[s : s + chunk, 0] = conv_branch_scores(model, "stage1.freq", freq)
        out[s : s + chunk, 1] = conv_branch_scores(model, "stage1.img", patches)
        tokens = np.stack([cache.sift(g) for g in group])
        out[s : s + chunk, 2] = sift_branch_scores(model, "stage1.sift", tokens)
    return out


def stage2_score_table(model, samples, cache, chunk=8):
    """Dict of (n,M) stage-2 branch score tables."""
    n, m = len(samples), model.n_types
    out = {"stage2.sift": np.zeros((n, m)), "stage2.img": np.zeros((n, m))}
    for s in range(0, n, chunk):
        group = samples[s : s + chunk]
        tokens = np.stack([cache.sift(g) for g in group])
        out["stage2.sift"][s : s + chunk] = sift_branch_scores(model, "stage2.sift", tokens)
        patches = np.stack([_patch_stack(g.pixels) for g in group])
        out["stage2.img"][s : s + chunk] = conv_branch_scores(model, "stage2.img", patches)
    return out


# ---------------------------------------------------------------------------
# evaluation


def evaluate(model, samples, cache=None, chunk=8):
    """Deterministic metrics + per-sample rows for one split.

    Metric keys are "<stage>/<name>"; rows carry everything needed to
    recount every metric from the dump alone.
    """
    cache = cache or FeatureCache()
    n, m = len(samples), model.n_types
    s1 = stage1_score_table(model, samples, cache, chunk)
    s2 = stage2_score_table(model, samples, cache, chunk)
    fused1 = fuse_scores([s1[:, 0], s1[:, 1], s1[:, 2]], model.w1)
    fused2 = fuse_scores([s2["stage2.sift"], s2["stage2.img"]], model.w2)
    binaries = np.array([s.binary for s in samples])
    types = np.array([s.type_index for s in samples])
    pred_fake = fused1 >= model.tau
    pred_type = np.argmax(fused2, axis=1)

    metrics = {}
    metrics["stage1/acc"] = float((pred_fake == (binaries == 1)).mean())
    for j, name in enumerate(("freq", "img", "sift")):
        metrics[f"stage1/acc_{name}"] = float(((s1[:, j] >= model.tau) == (binaries == 1)).mean())
    fakes = binaries == 1
    if fakes.any():
        routed_ok = pred_fake & fakes & (pred_type == types)
        metrics["stage2/type_acc"] = float(routed_ok[fakes].mean())
        for key, name in (("stage2.sift", "sift"), ("stage2.img", "img")):
            metrics[f"stage2/branch_acc_{name}"] = float(
                (np.argmax(s2[key], axis=1) == types)[fakes].mean())
        metrics["stage2/fused_branch_acc"] = float((pred_type == types)[fakes].mean())
    # end-to-end (M+1)-way: class 0 = real, 1+t = fake type t
    true_cls = np.where(binaries == 1, 1 + types, 0)
    pred_cls = np.where(pred_fake, 1 + pred_type, 0)
    metrics["e2e/acc"] = float((true_cls == pred_cls).mean())
    names = ("real",) + tuple(f"fake_{t}" for t in model.type_names)
    cm = np.zeros((m + 1, m + 1), dtype=np.int64)
    np.add.at(cm, (true_cls, pred_cls), 1)
    for i, ni in enumerate(names):
        for j, nj in enumerate(names):
            metrics[f"e2e/cm_{ni}_{nj}"] = float(cm[i, j])

    rows = []
    for i, s in enumerate(samples):
        rows.append({
            "sample_id": s.sid,
            "true_binary": int(binaries[i]),
            "true_type": model.type_names[types[i]] if binaries[i] else "none",
            "s_det": float(fused1[i]),
            "pred_label": "fake" if pred_fake[i] else "real",
            "pred_type": model.type_names[pred_type[i]] if pred_fake[i] else "none",
            "s1_freq": float(s1[i, 0]),
            "s1_img": float(s1[i, 1]),
            "s1_sift": float(s1[i, 2]),
            "s2_sift": ";".join(f"{v:.10g}" for v in s2["stage2.sift"][i]),
            "s2_img": ";".join(f"{v:.10g}" for v in s2["stage2.img"][i]),
        })
    return metrics, rows


_ROW_COLUMNS = ("sample_id", "true_binary", "true_type", "s_det", "pred_label",
                "pred_type", "s1_freq", "s1_img", "s1_sift", "s2_sift", "s2_img")


def write_metrics_tsv(path, split, metrics):
    with open(path, "w") as fh:
        fh.write("split\tstage\tmetric\tvalue\n")
        for key in metrics:
            stage, name = key.split("/", 1)
            fh.write(f"{split}\t{stage}\t{name}\t{metrics[key]:.10g}\n")


def write_predictions_tsv(path, rows):
    with open(path, "w") as fh:
        fh.write("\t".join(_ROW_COLUMNS) + "\n")
        for row in rows:
            fh.write("\t".join(str(row[c]) for c in _ROW_COLUMNS) + "\n")


# ---------------------------------------------------------------------------
# baselines / ablations (separate throwaway models, never part of the
# two-stage pipeline)


@dataclass
class ConvBranchModel:
    """A standalone backbone+attention classifier over one patch domain."""

    bcfg: BackboneConfig
    acfg: AttenConfig
    backbone: dict
    atten: dict
    domain: str  # "img" or "freq"
    stats: object = None
    squash: bool = True

    def inputs(self, sample):
        patches = _patch_stack(sample.pixels)
        if self.domain == "freq":
            return freq_patch_stack(patches, self.stats, self.squash)
        return patches


def init_conv_branch_model(out_dim, domain, cfg, seed_tag, stats=None):
    rng = _branch_rng(cfg, seed_tag)
    bcfg = BackboneConfig(cfg.widths, cfg.dim, cfg.head_hidden, cfg.stem_stride, out_dim)
    acfg = AttenConfig(9, cfg.dim, cfg.n_head, cfg.mlp_hidden, out_dim)
    return ConvBranchModel(bcfg=bcfg, acfg=acfg, backbone=init_backbone(bcfg, rng),
                           atten=init_attenfusion(acfg, rng), domain=domain,
                           stats=stats, squash=cfg.freq_squash)


def train_conv_branch_model(branch, samples, labels, cfg, epochs, seed_tag):
    trainer = _conv_branch_trainer(branch.backbone, branch.bcfg, branch.atten,
                                   branch.acfg, samples, branch.inputs)
    groups = [(list(branch.backbone.values()), cfg.lr_backbone),
              (list(branch.atten.values()), cfg.lr_attenfusion)]
    return _train_loop(trainer, labels, groups, cfg, _branch_rng(cfg, seed_tag + 1),
                       epochs, binary=branch.acfg.out_dim == 1)


def conv_branch_model_scores(branch, samples, chunk=8):
    n = len(samples)
    out = np.zeros((n, branch.acfg.out_dim))
    for s in range(0, n, chunk):
        group = samples[s : s + chunk]
        inputs = np.stack([branch.inputs(g) for g in group])
        b = inputs.shape[0]
        x = E.Tensor(inputs.reshape(b * 9, 1, PATCH_SIZE, PATCH_SIZE))
        tokens, _ = backbone_forward(x, branch.backbone, branch.bcfg, training=False)
        for i in range(b):
            rows = E.narrow(tokens, 0, 9 * i, 9)
            fused, _ = attenfusion_forward(rows, branch.atten, branch.acfg, training=False)
            out[s + i] = fused.data.reshape(-1)
    return out


def train_flat_baseline(dataset, cfg):
    """Single-stage (M+1)-way classifier over the image branch architecture.

    Gets the same total epoch budget the hierarchical image path receives
    across both stages.  Class 0 = real, 1+t = forgery type t.
    """
    train = dataset.splits["train"]
    m = len(dataset.type_names)
    flat = init_conv_branch_model(m + 1, "img", cfg, seed_tag=301)
    labels = np.array([0 if s.binary == 0 else 1 + s.type_index for s in train])
    history = train_conv_branch_model(flat, train, labels, cfg,
                                      cfg.epochs_stage1 + cfg.epochs_stage2, seed_tag=301)
    return flat, history


def flat_accuracy(flat, samples):
    """(M+1)-way accuracy of the flat baseline."""
    scores = conv_branch_model_scores(flat, samples)
    pred = np.argmax(scores, axis=1)
    true_cls = np.array([0 if s.binary == 0 else 1 + s.type_index for s in samples])
    return float((pred == true_cls).mean())


def train_stage2_freq_ablation(dataset, model, cfg, cache=None):
    """Frequency-domain type classifier trained on the same stage-2 set.

    Exists only to measure how much worse a frequency branch does at stage 2
    under perturbation; it is never wired into the pipeline.
    """
    cache = cache or FeatureCache()
    chosen = stage2_training_set(dataset, model, cfg, cache)
    if not chosen:
        raise DataError("stage-2 ablation: authenticity filter kept no samples")
    branch = init_conv_branch_model(model.n_types, "freq", cfg, seed_tag=401,
                                    stats=model.stats)
    labels = np.array([s.type_index for s in chosen])
    history = train_conv_branch_model(branch, chosen, labels, cfg,
                                      cfg.epochs_stage2, seed_tag=401)
    return branch, history


def branch_type_accuracy(scores, samples):
    """Unrouted type accuracy over the true fakes in ``samples``."""
    types = np.array([s.type_index for s in samples])
    fakes = types >= 0
    if not fakes.any():
        raise DataError("no fakes to score")
    return float((np.argmax(scores, axis=1) == types)[fakes].mean())
