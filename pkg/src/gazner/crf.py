"""Linear-chain conditional random field: inference, training, decoding.

All lattice computations run in log space on batches of equal-length
sentences, shaped (B, T, L). Training minimizes the L2-regularized
negative log-likelihood with a limited-memory quasi-Newton optimizer
(plain gradient descent is available as a fallback). The numeric path is
fixed-order numpy plus scipy sparse products, so results do not depend
on the worker thread count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import FormatError, LabelError, TrainingError
from .features import FeaturizedSentence
from .ioutil import atomic_write, escape_name, unescape_name

log = logging.getLogger("gazner.crf")

_MODEL_VERSION = 1


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - safe), axis=axis))
    return np.squeeze(safe, axis=axis) + out


# -- single-lattice operations ------------------------------------------


@dataclass
class Lattice:
    """Per-position label scores plus shared bigram scores, in log space."""

    emissions: np.ndarray  # (T, L)
    transitions: np.ndarray  # (L, L); [i, j] scores label i followed by j

    def __post_init__(self):
        self.emissions = np.asarray(self.emissions, dtype=np.float64)
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        T, L = self.emissions.shape
        if self.transitions.shape != (L, L):
            raise ValueError(
                f"transitions must be ({L}, {L}) to match emissions, got {self.transitions.shape}"
            )
        if T < 1:
            raise ValueError("lattice needs at least one position")


def score_sequence(lattice: Lattice, seq) -> float:
    """Unnormalized log score of one label sequence."""
    seq = np.asarray(seq, dtype=np.int64)
    T = lattice.emissions.shape[0]
    if seq.shape != (T,):
        raise ValueError(f"sequence length {seq.shape} does not match lattice length {T}")
    total = float(lattice.emissions[np.arange(T), seq].sum())
    if T > 1:
        total += float(lattice.transitions[seq[:-1], seq[1:]].sum())
    return total


def _forward(emis: np.ndarray, trans: np.ndarray) -> np.ndarray:
    B, T, L = emis.shape
    alpha = np.empty_like(emis)
    alpha[:, 0] = emis[:, 0]
    for t in range(1, T):
        alpha[:, t] = _logsumexp(alpha[:, t - 1][:, :, None] + trans[None, :, :], axis=1) + emis[:, t]
    return alpha


def _backward(emis: np.ndarray, trans: np.ndarray) -> np.ndarray:
    B, T, L = emis.shape
    beta = np.zeros_like(emis)
    for t in range(T - 2, -1, -1):
        beta[:, t] = _logsumexp(trans[None, :, :] + (emis[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)
    return beta


def log_partition(lattice: Lattice) -> float:
    alpha = _forward(lattice.emissions[None], lattice.transitions)
    return float(_logsumexp(alpha[:, -1], axis=1)[0])


def marginals(lattice: Lattice) -> tuple[np.ndarray, np.ndarray]:
    """Posterior node (T, L) and edge (T-1, L, L) probabilities."""
    emis = lattice.emissions[None]
    trans = lattice.transitions
    alpha = _forward(emis, trans)
    beta = _backward(emis, trans)
    logz = _logsumexp(alpha[:, -1], axis=1)[:, None, None]
    node = np.exp(alpha + beta - logz)[0]
    T = emis.shape[1]
    if T == 1:
        return node, np.zeros((0, trans.shape[0], trans.shape[0]))
    edge = np.exp(
        alpha[:, :-1, :, None]
        + trans[None, None, :, :]
        + (emis[:, 1:] + beta[:, 1:])[:, :, None, :]
        - logz[:, :, :, None]
    )[0]
    return node, edge


def _viterbi_batch(emis: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """Best label index sequence per batch row; ties pick the lowest index."""
    B, T, L = emis.shape
    delta = emis[:, 0].copy()
    back = np.empty((B, T, L), dtype=np.int64)
    for t in range(1, T):
        scores = delta[:, :, None] + trans[None, :, :]
        back[:, t] = scores.argmax(axis=1)
        delta = scores.max(axis=1) + emis[:, t]
    paths = np.empty((B, T), dtype=np.int64)
    paths[:, T - 1] = delta.argmax(axis=1)
    for t in range(T - 2, -1, -1):
        paths[:, t] = back[np.arange(B), t + 1, paths[:, t + 1]]
    return paths


def viterbi_lattice(lattice: Lattice) -> list[int]:
    return list(_viterbi_batch(lattice.emissions[None], lattice.transitions)[0])


# -- dataset encoding ----------------------------------------------------


@dataclass
class EncodedDataset:
    """Feature rows in sparse form plus everything the loss needs."""

    X: sparse.csr_matrix  # (N, V)
    offsets: np.ndarray  # (S + 1,) row span of each sentence
    buckets: dict[int, np.ndarray]  # length -> sentence indices, input order
    gold: np.ndarray | None = None  # (N,)
    trans_counts: np.ndarray | None = None  # (L, L) gold bigram counts

    @property
    def n_tokens(self) -> int:
        return self.X.shape[0]

    @property
    def n_sentences(self) -> int:
        return len(self.offsets) - 1


def build_vocab(featurized: list[FeaturizedSentence]) -> dict[str, int]:
    """First-seen feature indexing over sentences in order, names sorted
    within each token, so the mapping is a pure function of the input."""
    vocab: dict[str, int] = {}
    for sent in featurized:
        for f in sent.features:
            for name in sorted(f):
                if name not in vocab:
                    vocab[name] = len(vocab)
    return vocab


def encode_dataset(
    featurized: list[FeaturizedSentence],
    labels: tuple[str, ...],
    vocab: dict[str, int],
    with_gold: bool = True,
) -> EncodedDataset:
    """Turn featurized sentences into a CSR matrix and bucket index.

    Features absent from the vocabulary are dropped, which is how unseen
    test-time features are ignored. With ``with_gold`` the label column
    is required and validated.
    """
    label_index = {lab: i for i, lab in enumerate(labels)}
    L = len(labels)
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    gold: list[int] = []
    offsets = [0]
    buckets: dict[int, list[int]] = {}
    for s_idx, sent in enumerate(featurized):
        if with_gold:
            if sent.labels is None:
                raise LabelError(f"sentence {sent.id} has no labels")
            for lab in sent.labels:
                if lab not in label_index:
                    raise LabelError(f"sentence {sent.id}: unknown label {lab!r}")
                gold.append(label_index[lab])
        for f in sent.features:
            for name in sorted(f):
                col = vocab.get(name)
                if col is not None:
                    indices.append(col)
                    data.append(float(f[name]))
            indptr.append(len(indices))
        offsets.append(offsets[-1] + len(sent.tokens))
        buckets.setdefault(len(sent.tokens), []).append(s_idx)
    X = sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(offsets[-1], len(vocab)),
    )
    X.sort_indices()
    gold_arr = np.asarray(gold, dtype=np.int64) if with_gold else None
    trans_counts = None
    if with_gold:
        trans_counts = np.zeros((L, L), dtype=np.float64)
        off = np.asarray(offsets)
        for s in range(len(featurized)):
            seq = gold_arr[off[s] : off[s + 1]]
            if len(seq) > 1:
                np.add.at(trans_counts, (seq[:-1], seq[1:]), 1.0)
    return EncodedDataset(
        X=X,
        offsets=np.asarray(offsets, dtype=np.int64),
        buckets={k: np.asarray(v, dtype=np.int64) for k, v in buckets.items()},
        gold=gold_arr,
        trans_counts=trans_counts,
    )


def _bucket_rows(data: EncodedDataset, T: int) -> np.ndarray:
    idx = data.buckets[T]
    return data.offsets[idx][:, None] + np.arange(T)[None, :]


# -- loss and gradient ---------------------------------------------------


def nll_and_gradient(
    emission: np.ndarray,
    transition: np.ndarray,
    data: EncodedDataset,
    l2: float = 0.1,
    data_weight: float = 1.0,
    threads: int = 1,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Regularized negative log-likelihood and its exact gradient.

    The data term is ``sum(logZ - gold score)`` scaled by ``data_weight``
    (zero isolates the regularizer), the penalty is ``l2/2`` times the
    squared norm of all weights. Per-length buckets are independent, so
    they may be computed on worker threads; results are combined in
    sorted bucket order either way.
    """
    if data.gold is None:
        raise LabelError("gradient needs gold labels")
    emission = np.asarray(emission, dtype=np.float64)
    transition = np.asarray(transition, dtype=np.float64)
    N, V = data.X.shape
    L = transition.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        U = data.X @ emission  # (N, L)

    node_post = np.empty((N, L))

    def run_bucket(T: int):
        # Divergent weights produce inf and nan here on purpose; the
        # caller checks finiteness, so keep the warnings quiet. The
        # errstate is thread local and must sit inside the worker.
        with np.errstate(over="ignore", invalid="ignore"):
            rows = _bucket_rows(data, T)
            emis = U[rows]  # (B, T, L)
            alpha = _forward(emis, transition)
            beta = _backward(emis, transition)
            logz = _logsumexp(alpha[:, -1], axis=1)
            node = np.exp(alpha + beta - logz[:, None, None])
            if T > 1:
                edge = np.exp(
                    alpha[:, :-1, :, None]
                    + transition[None, None, :, :]
                    + (emis[:, 1:] + beta[:, 1:])[:, :, None, :]
                    - logz[:, None, None, None]
                )
                edge_sum = edge.sum(axis=(0, 1))
            else:
                edge_sum = np.zeros((L, L))
            return T, rows, node, edge_sum, float(logz.sum())

    lengths = sorted(data.buckets)
    if threads > 1 and len(lengths) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = {r[0]: r for r in pool.map(run_bucket, lengths)}
    else:
        results = {T: run_bucket(T) for T in lengths}

    with np.errstate(over="ignore", invalid="ignore"):
        logz_total = 0.0
        edge_total = np.zeros((L, L))
        for T in lengths:
            _, rows, node, edge_sum, logz_sum = results[T]
            node_post[rows.ravel()] = node.reshape(-1, L)
            edge_total += edge_sum
            logz_total += logz_sum

        gold_score = float(U[np.arange(N), data.gold].sum())
        gold_score += float((transition * data.trans_counts).sum())
        nll = data_weight * (logz_total - gold_score)
        nll += 0.5 * l2 * (float((emission * emission).sum()) + float((transition * transition).sum()))

        onehot = sparse.csr_matrix(
            (np.ones(N), (np.arange(N), data.gold)), shape=(N, L)
        )
        expected = data.X.T @ node_post  # (V, L)
        empirical = (data.X.T @ onehot).toarray()
        grad_e = data_weight * (expected - empirical) + l2 * emission
        grad_t = data_weight * (edge_total - data.trans_counts) + l2 * transition
        return float(nll), grad_e, grad_t


# -- optimization --------------------------------------------------------


def _two_loop(g: np.ndarray, s_hist: list[np.ndarray], y_hist: list[np.ndarray]) -> np.ndarray:
    """L-BFGS two-loop recursion: approximate -H^{-1} g from curvature pairs."""
    q = g.copy()
    alphas = []
    rhos = [1.0 / float(np.dot(y, s)) for s, y in zip(s_hist, y_hist)]
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rhos)):
        a = rho * float(np.dot(s, q))
        alphas.append(a)
        q -= a * y
    y_last, s_last = y_hist[-1], s_hist[-1]
    gamma = float(np.dot(s_last, y_last)) / float(np.dot(y_last, y_last))
    q *= gamma
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rhos), reversed(alphas)):
        b = rho * float(np.dot(y, q))
        q += (a - b) * s
    return -q


def _minimize(fun, x0: np.ndarray, optimizer: str, max_iters: int, tol: float):
    """Armijo backtracking descent; 'lbfgs' adds the two-loop direction.

    Returns (x, history of accepted objective values, iterations run).
    Non-finite values at the start abort; during a line search they just
    shrink the step.
    """
    c1 = 1e-4
    x = x0
    f, g = fun(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise TrainingError("objective is not finite at the starting point")
    history = [f]
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    iterations = 0
    for _ in range(max_iters):
        if optimizer == "lbfgs" and s_hist:
            d = _two_loop(g, s_hist, y_hist)
            if not np.all(np.isfinite(d)) or float(np.dot(d, g)) >= 0.0:
                d = -g
        else:
            d = -g
        slope = float(np.dot(g, d))
        if slope >= 0.0:
            break
        step = 1.0
        f_new = g_new = None
        while step > 1e-20:
            trial = x + step * d
            f_try, g_try = fun(trial)
            if np.isfinite(f_try) and f_try <= f + c1 * step * slope:
                f_new, g_new, x_new = f_try, g_try, trial
                break
            step *= 0.5
        if f_new is None:
            if float(np.abs(g).max()) < 1e-6:
                break  # flat to machine precision; nothing left to gain
            raise TrainingError("line search failed to find a finite descent step")
        iterations += 1
        s = x_new - x
        y = g_new - g
        if float(np.dot(s, y)) > 1e-10:
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > 10:
                s_hist.pop(0)
                y_hist.pop(0)
        rel = (f - f_new) / max(1.0, abs(f))
        x, f, g = x_new, f_new, g_new
        history.append(f)
        if rel < tol:
            break
    return x, history, iterations


# -- the model -----------------------------------------------------------


@dataclass
class CrfModel:
    labels: tuple[str, ...]
    vocab: dict[str, int]
    emission: np.ndarray  # (V, L)
    transition: np.ndarray  # (L, L)
    l2: float
    meta: dict[str, str] = field(default_factory=dict)
    nll_history: list[float] = field(default_factory=list, repr=False)

    def save(self, path: str | Path) -> None:
        V, L = self.emission.shape
        with atomic_write(path) as fh:
            fh.write(f"#CRF version={_MODEL_VERSION} labels={L} features={V} l2={self.l2!r}\n")
            for key in sorted(self.meta):
                fh.write(f"#META {key}={self.meta[key]}\n")
            fh.write("#LABELS\n")
            for lab in self.labels:
                fh.write(lab + "\n")
            fh.write("#VOCAB\n")
            for name in sorted(self.vocab, key=self.vocab.get):
                fh.write(escape_name(name) + "\n")
            fh.write("#EMISSION\n")
            for row in self.emission:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            fh.write("#TRANSITION\n")
            for row in self.transition:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CrfModel":
        path = Path(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].startswith("#CRF "):
            raise FormatError(f"{path}: not a model file")
        header = dict(kv.split("=", 1) for kv in lines[0][len("#CRF ") :].split())
        try:
            version = int(header["version"])
            L = int(header["labels"])
            V = int(header["features"])
            l2 = float(header["l2"])
        except (KeyError, ValueError) as exc:
            raise FormatError(f"{path}: malformed model header") from exc
        if version != _MODEL_VERSION:
            raise FormatError(f"{path}: unsupported model version {version}")
        meta: dict[str, str] = {}
        i = 1
        while i < len(lines) and lines[i].startswith("#META "):
            key, _, value = lines[i][len("#META ") :].partition("=")
            meta[key] = value
            i += 1

        def expect(tag: str):
            nonlocal i
            if i >= len(lines) or lines[i] != tag:
                raise FormatError(f"{path}: expected {tag} section")
            i += 1

        def take_rows(count: int, width: int) -> np.ndarray:
            nonlocal i
            out = np.empty((count, width))
            for r in range(count):
                if i >= len(lines):
                    raise FormatError(f"{path}: truncated model file")
                fields = lines[i].split()
                if len(fields) != width:
                    raise FormatError(f"{path}: row {i + 1} has {len(fields)} values, expected {width}")
                out[r] = [float(v) for v in fields]
                i += 1
            return out

        expect("#LABELS")
        if i + L > len(lines):
            raise FormatError(f"{path}: truncated model file")
        labels = tuple(lines[i : i + L])
        i += L
        expect("#VOCAB")
        if i + V > len(lines):
            raise FormatError(f"{path}: truncated model file")
        vocab = {unescape_name(lines[i + j]): j for j in range(V)}
        i += V
        expect("#EMISSION")
        emission = take_rows(V, L)
        expect("#TRANSITION")
        transition = take_rows(L, L)
        if i != len(lines):
            raise FormatError(f"{path}: {len(lines) - i} trailing lines after model data")
        return cls(labels=labels, vocab=vocab, emission=emission, transition=transition, l2=l2, meta=meta)


def train(
    featurized: list[FeaturizedSentence],
    labels: tuple[str, ...],
    l2: float = 0.1,
    optimizer: str = "lbfgs",
    max_iters: int = 200,
    tol: float = 1e-5,
    seed: int = 0,
    threads: int = 1,
    meta: dict[str, str] | None = None,
) -> CrfModel:
    """Fit CRF weights on featurized sentences.

    The objective is convex, so weights start at zero and the seed is
    recorded for provenance only. ``threads`` parallelizes bucket-level
    lattice work without changing any result.
    """
    if optimizer not in ("lbfgs", "gd"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    if not featurized:
        raise TrainingError("no sentences to train on")
    vocab = build_vocab(featurized)
    data = encode_dataset(featurized, labels, vocab, with_gold=True)
    V, L = len(vocab), len(labels)

    def unpack(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return x[: V * L].reshape(V, L), x[V * L :].reshape(L, L)

    def fun(x: np.ndarray) -> tuple[float, np.ndarray]:
        emission, transition = unpack(x)
        f, ge, gt = nll_and_gradient(emission, transition, data, l2=l2, threads=threads)
        return f, np.concatenate([ge.ravel(), gt.ravel()])

    x0 = np.zeros(V * L + L * L)
    x, history, iterations = _minimize(fun, x0, optimizer, max_iters, tol)
    emission, transition = unpack(x)
    all_meta = dict(meta or {})
    all_meta.setdefault("optimizer", optimizer)
    all_meta.setdefault("seed", str(seed))
    all_meta["iterations"] = str(iterations)
    all_meta["final_nll"] = repr(history[-1])
    log.info("trained %d iterations, nll %.6f -> %.6f", iterations, history[0], history[-1])
    return CrfModel(
        labels=tuple(labels),
        vocab=vocab,
        emission=emission,
        transition=transition,
        l2=l2,
        meta=all_meta,
        nll_history=history,
    )


def decode(model: CrfModel, featurized: list[FeaturizedSentence], threads: int = 1) -> list[list[str]]:
    """Most likely label sequence for each sentence.

    Features the model has never seen are ignored; ties anywhere in the
    lattice resolve toward the lowest label index.
    """
    if not featurized:
        return []
    data = encode_dataset(featurized, model.labels, model.vocab, with_gold=False)
    U = data.X @ model.emission
    pred_idx = np.empty(data.n_tokens, dtype=np.int64)

    def run_bucket(T: int):
        rows = _bucket_rows(data, T)
        return rows, _viterbi_batch(U[rows], model.transition)

    lengths = sorted(data.buckets)
    if threads > 1 and len(lengths) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_bucket, lengths))
    else:
        results = [run_bucket(T) for T in lengths]
    for rows, paths in results:
        pred_idx[rows.ravel()] = paths.ravel()

    out = []
    for s in range(data.n_sentences):
        span = pred_idx[data.offsets[s] : data.offsets[s + 1]]
        out.append([model.labels[i] for i in span])
    return out
