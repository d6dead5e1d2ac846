"""Gradient-trained predictors: multinomial logistic regression and a
single-hidden-layer network.

Both expose their loss/gradient functions separately from the training
loop so finite-difference checks can probe them directly.
"""

from __future__ import annotations

import numpy as np


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def one_hot(codes: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(codes), n_classes))
    out[np.arange(len(codes)), codes] = 1.0
    return out


def logistic_loss_grad(W, b, X, Y, l2):
    """Cross-entropy + L2 on weights (bias excluded); mean over rows."""
    n = X.shape[0]
    P = softmax(X @ W.T + b)
    eps = 1e-300
    loss = -np.log(np.clip((P * Y).sum(axis=1), eps, None)).mean()
    loss += 0.5 * l2 * float((W * W).sum())
    delta = (P - Y) / n
    grad_w = delta.T @ X + l2 * W
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def fit_logistic(X, y, n_classes, hyper, seed):
    """Full-batch gradient descent with Armijo backtracking on the step."""
    n, d = X.shape
    Y = one_hot(y, n_classes)
    W = np.zeros((n_classes, d))
    b = np.zeros(n_classes)
    lr = hyper.logistic_lr
    loss, gw, gb = logistic_loss_grad(W, b, X, Y, hyper.logistic_l2)
    for _ in range(hyper.logistic_max_iters):
        gnorm_sq = float((gw * gw).sum() + (gb * gb).sum())
        if np.sqrt(gnorm_sq) < hyper.logistic_tol:
            break
        accepted = False
        while lr > 1e-12:
            W_new = W - lr * gw
            b_new = b - lr * gb
            loss_new, gw_new, gb_new = logistic_loss_grad(
                W_new, b_new, X, Y, hyper.logistic_l2
            )
            if loss_new <= loss - 1e-4 * lr * gnorm_sq:
                accepted = True
                break
            lr *= 0.5
        if not accepted:
            break
        W, b, loss, gw, gb = W_new, b_new, loss_new, gw_new, gb_new
        lr = min(lr * 1.25, hyper.logistic_lr)
    return {"W": W, "b": b, "n_features": d}


def logistic_scores_batch(params, X) -> np.ndarray:
    return softmax(np.atleast_2d(X) @ params["W"].T + params["b"])


def nn_init(d, hidden, n_classes, rng):
    a1 = np.sqrt(6.0 / (d + hidden))
    a2 = np.sqrt(6.0 / (hidden + n_classes))
    return {
        "W1": rng.uniform(-a1, a1, size=(hidden, d)),
        "b1": np.zeros(hidden),
        "W2": rng.uniform(-a2, a2, size=(n_classes, hidden)),
        "b2": np.zeros(n_classes),
    }


def nn_forward(params, X):
    H = np.maximum(X @ params["W1"].T + params["b1"], 0.0)
    return H, softmax(H @ params["W2"].T + params["b2"])


def nn_loss_grad(params, X, Y):
    n = X.shape[0]
    H, P = nn_forward(params, X)
    eps = 1e-300
    loss = -np.log(np.clip((P * Y).sum(axis=1), eps, None)).mean()
    delta2 = (P - Y) / n
    grad_w2 = delta2.T @ H
    grad_b2 = delta2.sum(axis=0)
    delta1 = (delta2 @ params["W2"]) * (H > 0.0)
    grad_w1 = delta1.T @ X
    grad_b1 = delta1.sum(axis=0)
    return loss, {"W1": grad_w1, "b1": grad_b1, "W2": grad_w2, "b2": grad_b2}


def fit_network(X, y, n_classes, hyper, seed):
    """Mini-batch gradient descent with a seeded shuffle per epoch."""
    n, d = X.shape
    Y = one_hot(y, n_classes)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
    params = nn_init(d, hyper.nn_hidden, n_classes, rng)
    batch = max(1, min(hyper.nn_batch, n))
    for _ in range(hyper.nn_epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch):
            sel = perm[start : start + batch]
            _, grads = nn_loss_grad(params, X[sel], Y[sel])
            for key in params:
                params[key] = params[key] - hyper.nn_lr * grads[key]
    params["n_features"] = d
    return params


def nn_scores_batch(params, X) -> np.ndarray:
    _, P = nn_forward(params, np.atleast_2d(X))
    return P
