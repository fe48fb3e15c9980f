"""Built-in trainable backend: a log-linear joint tagger and intent classifier.

The slot tagger scores each token independently from window features
(current/previous/next token identity plus a placeholder-token flag) — a
per-token softmax with no transition model, which is why downstream code
repairs orphan Inside labels and why confidence is measured per token. The
intent classifier is a log-linear model over bag-of-token counts. Both are
trained to the regularized optimum with L-BFGS, so training is
deterministic: the same corpus and parameters yield a byte-identical model
file.

This deliberately stays small and dependency-free, and it exhibits the
property the rewrite engine relies on: tokens seen in context during
training get confident (low-entropy) label distributions, while
out-of-vocabulary tokens do not.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.special import logsumexp

from iterdelex.backend import Backend, ParseResult
from iterdelex.corpus import Dataset, SlotLabel

FORMAT_NAME = "iterdelex-loglinear"
FORMAT_VERSION = 1

_BOS = "<s>"
_EOS = "</s>"
_UNK = "<unk>"

_N_SLOT_FEATURES = 5  # bias, cur, prev, next, special-flag


@dataclass(frozen=True)
class TrainingParams:
    l2: float = 1e-5
    max_iter: int = 300
    min_count: int = 1
    special_tokens: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.min_count < 1:
            raise ValueError("min_count must be at least 1")


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _fit_softmax(
    x: sp.csr_matrix, y: np.ndarray, n_classes: int, l2: float, max_iter: int
) -> np.ndarray:
    """Minimize mean cross-entropy + l2*||W||^2 (bias row unregularized)."""
    n_features = x.shape[1]
    n = x.shape[0]
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    reg_mask = np.ones((n_features, 1))
    reg_mask[0, 0] = 0.0  # feature 0 is the bias

    def objective(flat: np.ndarray):
        w = flat.reshape(n_features, n_classes)
        scores = x @ w
        log_z = logsumexp(scores, axis=1)
        nll = (log_z - scores[np.arange(n), y]).mean()
        probs = np.exp(scores - log_z[:, None])
        grad = (x.T @ (probs - onehot)) / n + 2.0 * l2 * (reg_mask * w)
        loss = nll + l2 * float((reg_mask * w * w).sum())
        return loss, grad.ravel()

    result = minimize(
        objective,
        np.zeros(n_features * n_classes),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "ftol": 1e-12, "gtol": 1e-8},
    )
    return result.x.reshape(n_features, n_classes)


class LogLinearBackend(Backend):
    def __init__(
        self,
        label_set: Sequence[SlotLabel],
        intent_set: Sequence[str],
        vocab: Sequence[str],
        slot_features: Sequence[str],
        slot_weights: np.ndarray,
        intent_features: Sequence[str],
        intent_weights: np.ndarray,
        special_tokens: Sequence[str],
        params: TrainingParams,
    ):
        self.label_set = tuple(label_set)
        self.intent_set = tuple(intent_set)
        self.vocab = frozenset(vocab)
        self.slot_features = tuple(slot_features)
        self.slot_weights = np.asarray(slot_weights, dtype=float)
        self.intent_features = tuple(intent_features)
        self.intent_weights = np.asarray(intent_weights, dtype=float)
        self.special_tokens = frozenset(special_tokens)
        self.params = params
        self._slot_index = {name: i for i, name in enumerate(self.slot_features)}
        self._intent_index = {name: i for i, name in enumerate(self.intent_features)}

    # -- feature templates -------------------------------------------------

    def _norm(self, token: str) -> str:
        return token if token in self.vocab else _UNK

    def _position_features(self, tokens: Sequence[str], t: int) -> list[str]:
        cur = self._norm(tokens[t])
        prev = self._norm(tokens[t - 1]) if t > 0 else _BOS
        nxt = self._norm(tokens[t + 1]) if t + 1 < len(tokens) else _EOS
        flag = "yes" if tokens[t] in self.special_tokens else "no"
        return ["bias", f"cur={cur}", f"prev={prev}", f"next={nxt}", f"special={flag}"]

    def _slot_feature_ids(self, names: list[str]) -> list[int]:
        index = self._slot_index
        return [index[n] for n in names if n in index]

    # -- training ----------------------------------------------------------

    @classmethod
    def train(cls, corpus: Dataset, params: TrainingParams | None = None) -> LogLinearBackend:
        """Fit on a labeled corpus; every utterance must carry labels and intent."""
        params = params or TrainingParams()
        if len(corpus.label_set) < 2:
            raise ValueError("training requires at least 2 slot labels")
        if not corpus.intent_set:
            raise ValueError("training requires at least 1 intent")
        for utt in corpus:
            if utt.gold_labels is None or utt.gold_intent is None:
                raise ValueError("training requires gold labels and intents")

        counts: dict[str, int] = {}
        for utt in corpus:
            for tok in utt.tokens:
                counts[tok] = counts.get(tok, 0) + 1
        vocab = sorted(t for t, c in counts.items() if c >= params.min_count)

        # assemble the model shell first so feature extraction is shared
        # between training and inference
        shell = cls(
            label_set=corpus.label_set,
            intent_set=corpus.intent_set,
            vocab=vocab,
            slot_features=(),
            slot_weights=np.zeros((0, 0)),
            intent_features=(),
            intent_weights=np.zeros((0, 0)),
            special_tokens=params.special_tokens,
            params=params,
        )

        label_index = {lab: i for i, lab in enumerate(corpus.label_set)}
        rows: list[list[str]] = []
        targets: list[int] = []
        for utt in corpus:
            assert utt.gold_labels is not None
            for t, gold in enumerate(utt.gold_labels):
                rows.append(shell._position_features(utt.tokens, t))
                targets.append(label_index[gold])

        feature_names = {name for row in rows for name in row}
        # inference-time sentinels must exist even if unseen during training
        feature_names.update(
            {"bias", f"cur={_UNK}", f"prev={_UNK}", f"next={_UNK}",
             f"prev={_BOS}", f"next={_EOS}", "special=yes", "special=no"}
        )
        slot_features = ["bias"] + sorted(feature_names - {"bias"})
        slot_index = {name: i for i, name in enumerate(slot_features)}

        n_rows = len(rows)
        col_ids = np.array([[slot_index[n] for n in row] for row in rows])
        x = sp.csr_matrix(
            (
                np.ones(n_rows * _N_SLOT_FEATURES),
                col_ids.ravel(),
                np.arange(0, _N_SLOT_FEATURES * (n_rows + 1), _N_SLOT_FEATURES),
            ),
            shape=(n_rows, len(slot_features)),
        )
        slot_weights = _fit_softmax(
            x, np.array(targets), len(corpus.label_set), params.l2, params.max_iter
        )

        # intent model: bag-of-token counts
        intent_features = ["bias"] + [f"tok={t}" for t in vocab] + [f"tok={_UNK}"]
        intent_index = {name: i for i, name in enumerate(intent_features)}
        intent_targets = np.array(
            [corpus.intent_set.index(utt.gold_intent) for utt in corpus]
        )
        data, indices, indptr = [], [], [0]
        for utt in corpus:
            bag: dict[int, float] = {0: 1.0}
            for tok in utt.tokens:
                fid = intent_index.get(f"tok={shell._norm(tok)}")
                if fid is not None:
                    bag[fid] = bag.get(fid, 0.0) + 1.0
            for fid in sorted(bag):
                indices.append(fid)
                data.append(bag[fid])
            indptr.append(len(indices))
        xi = sp.csr_matrix(
            (np.array(data), np.array(indices), np.array(indptr)),
            shape=(len(corpus), len(intent_features)),
        )
        intent_weights = _fit_softmax(
            xi, intent_targets, len(corpus.intent_set), params.l2, params.max_iter
        )

        return cls(
            label_set=corpus.label_set,
            intent_set=corpus.intent_set,
            vocab=vocab,
            slot_features=slot_features,
            slot_weights=slot_weights,
            intent_features=intent_features,
            intent_weights=intent_weights,
            special_tokens=params.special_tokens,
            params=params,
        )

    # -- inference -----------------------------------------------------------

    def parse(self, tokens: Sequence[str]) -> ParseResult:
        if not tokens:
            raise ValueError("cannot parse an empty token sequence")
        n = len(tokens)
        scores = np.zeros((n, len(self.label_set)))
        for t in range(n):
            ids = self._slot_feature_ids(self._position_features(tokens, t))
            scores[t] = self.slot_weights[ids].sum(axis=0)
        dists = _softmax_rows(scores)

        bag = np.zeros(len(self.intent_features))
        bag[0] = 1.0
        for tok in tokens:
            fid = self._intent_index.get(f"tok={self._norm(tok)}")
            if fid is not None:
                bag[fid] += 1.0
        intent_scores = bag @ self.intent_weights
        intent_dist = _softmax_rows(intent_scores[None, :])[0]
        return ParseResult.from_distributions(
            self.label_set, self.intent_set, dists, intent_dist
        )

    # -- serialization --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Write the model as a versioned JSON file; round-trips bit-exactly."""
        payload = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "labels": [str(lab) for lab in self.label_set],
            "intents": list(self.intent_set),
            "vocab": sorted(self.vocab),
            "slot_features": list(self.slot_features),
            "slot_weights": self.slot_weights.tolist(),
            "intent_features": list(self.intent_features),
            "intent_weights": self.intent_weights.tolist(),
            "special_tokens": sorted(self.special_tokens),
            "params": {
                "l2": self.params.l2,
                "max_iter": self.params.max_iter,
                "min_count": self.params.min_count,
            },
        }
        Path(path).write_text(
            json.dumps(payload, sort_keys=True, separators=(",", ":")), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> LogLinearBackend:
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not a valid model file: {exc.msg}") from exc
        if payload.get("format") != FORMAT_NAME:
            raise ValueError(f"{path}: not a {FORMAT_NAME} model file")
        if payload.get("version") != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported model version {payload.get('version')}")
        params = TrainingParams(
            l2=payload["params"]["l2"],
            max_iter=payload["params"]["max_iter"],
            min_count=payload["params"]["min_count"],
            special_tokens=tuple(sorted(payload["special_tokens"])),
        )
        return cls(
            label_set=tuple(SlotLabel.parse(s) for s in payload["labels"]),
            intent_set=tuple(payload["intents"]),
            vocab=payload["vocab"],
            slot_features=payload["slot_features"],
            slot_weights=np.array(payload["slot_weights"], dtype=float),
            intent_features=payload["intent_features"],
            intent_weights=np.array(payload["intent_weights"], dtype=float),
            special_tokens=payload["special_tokens"],
            params=params,
        )
