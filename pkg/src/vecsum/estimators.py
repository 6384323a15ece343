"""scikit-learn style front ends for the offline and streaming coresets."""
from __future__ import annotations

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator
from sklearn.utils.validation import _check_sample_weight, check_array, check_is_fitted

from .coreset import Coreset, CoresetParams, coreset, estimate_mean
from .distributed import Cluster
from .vector import SparseVector, WeightedPointSet, weighted_mean, weighted_variance


def rows_as_sparse(X) -> list[SparseVector]:
    """Split a dense array or scipy sparse matrix into per-row :class:`SparseVector` objects."""
    if sparse.issparse(X):
        X = sparse.csr_matrix(X)
        X.sum_duplicates()
        out = []
        for i in range(X.shape[0]):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            out.append(SparseVector.from_arrays(X.indices[lo:hi], X.data[lo:hi]))
        return out
    return [SparseVector.from_dense(row) for row in np.asarray(X)]


def _pad(v: np.ndarray, d: int) -> np.ndarray:
    out = np.zeros(d)
    out[: min(d, v.size)] = v[:d]
    return out


class MeanCoreset(BaseEstimator):
    """Offline weighted subset whose weighted mean tracks the data mean.

    Parameters
    ----------
    beta : int
        Frank-Wolfe iterations; the coreset holds at most ``beta + 1`` rows.
    alpha : float
        Constant relating ``beta`` to the error level ``alpha / beta``.
    rule : {"linear", "farthest"}
        Vertex selection rule inside Frank-Wolfe.

    Attributes
    ----------
    coreset_ : Coreset
    indices_ : ndarray of row positions kept from ``X``
    weights_ : ndarray, distribution over ``indices_``
    mean_ : ndarray of shape (n_features,), weighted mean of the kept rows
    """

    def __init__(self, beta=100, alpha=4.0, rule="linear", degenerate_tol=1e-12):
        self.beta = beta
        self.alpha = alpha
        self.rule = rule
        self.degenerate_tol = degenerate_tol

    def _params(self) -> CoresetParams:
        return CoresetParams(self.beta, alpha=self.alpha, degenerate_tol=self.degenerate_tol, rule=self.rule)

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        sample_weight = _check_sample_weight(sample_weight, X)
        self.n_features_in_ = X.shape[1]
        P = WeightedPointSet.from_weights(rows_as_sparse(X), sample_weight)
        self.coreset_ = coreset(P, self._params())
        self.indices_ = self.coreset_.source_indices.copy()
        self.weights_ = self.coreset_.weights.copy()
        self.mean_ = _pad(estimate_mean(self.coreset_), self.n_features_in_)
        self.sum_ = self.coreset_.represented_weight * self.mean_
        return self

    def transform(self, X):
        """Rows of ``X`` selected by the fitted coreset (``X[indices_]``)."""
        check_is_fitted(self, "indices_")
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        return X[self.indices_]

    def score(self, X, y=None, sample_weight=None):
        """Negative squared distance to the weighted mean of ``X``, in units of its variance."""
        check_is_fitted(self, "mean_")
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        P = WeightedPointSet.from_weights(rows_as_sparse(X), _check_sample_weight(sample_weight, X))
        exact = _pad(weighted_mean(P), X.shape[1])
        var = weighted_variance(P)
        err = float(np.sum((exact - self.mean_) ** 2))
        return -err / var if var > 0 else -err


class StreamingMeanCoreset(BaseEstimator):
    """Merge-and-reduce coreset fed through :meth:`partial_fit`.

    ``n_machines > 1`` splits the rows round-robin over independent streams
    and merges their summaries on read, mimicking a distributed deployment.
    """

    def __init__(self, beta=100, leaf_size=None, alpha=4.0, rule="linear", n_machines=1):
        self.beta = beta
        self.leaf_size = leaf_size
        self.alpha = alpha
        self.rule = rule
        self.n_machines = n_machines

    def _reset(self):
        params = CoresetParams(self.beta, alpha=self.alpha, rule=self.rule)
        leaf = self.leaf_size or 2 * (params.beta + 1)
        self.cluster_ = Cluster(params, leaf, self.n_machines)
        self.n_samples_seen_ = 0

    def partial_fit(self, X, y=None):
        first = not hasattr(self, "cluster_")
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        if first:
            self._reset()
            self.n_features_in_ = X.shape[1]
        else:
            self.n_features_in_ = max(self.n_features_in_, X.shape[1])
        self.cluster_.extend(rows_as_sparse(X))
        self.n_samples_seen_ += X.shape[0]
        return self

    def fit(self, X, y=None):
        for attr in ("cluster_", "n_samples_seen_"):
            self.__dict__.pop(attr, None)
        return self.partial_fit(X)

    @property
    def coreset_(self) -> Coreset:
        check_is_fitted(self, "cluster_")
        return self.cluster_.collect()

    @property
    def mean_(self) -> np.ndarray:
        return _pad(estimate_mean(self.coreset_), self.n_features_in_)

    @property
    def sum_(self) -> np.ndarray:
        return self.n_samples_seen_ * self.mean_
