"""Matplotlib figures rendered next to the CSV outputs by the CLI."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def save_trace_figure(st, path):
    """Two panels: raw loss per iteration, and its moving average."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    axes[0].plot(st.iteration, st.raw, lw=0.5, color="tab:blue")
    axes[0].set_title("Loss per iteration")
    axes[1].plot(st.iteration, st.smoothed, lw=1.0, color="tab:orange")
    axes[1].set_title(f"Moving average (window {st.window})")
    for ax in axes:
        ax.set_xlabel("iteration")
        ax.set_ylabel("loss")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_lambda_figure(trace, path):
    """Both regularization weights along the tuning run."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(trace.iteration, trace.lambda1, label="lambda1")
    ax.plot(trace.iteration, trace.lambda2, label="lambda2")
    ax.set_xlabel("iteration")
    ax.set_ylabel("weight")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_ksweep_figure(k_values, rmses, path):
    """Test RMSE versus latent dimension."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(k_values, rmses, marker="o")
    best = int(np.argmin(rmses))
    ax.plot(k_values[best], rmses[best], marker="*", markersize=14, color="tab:red")
    ax.set_xlabel("latent dimension k")
    ax.set_ylabel("test RMSE")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_grid_figure(report, spec, path):
    """Heatmap of test RMSE over the weight grid, best cell starred."""
    n1 = len(spec.lambda1_values)
    n2 = len(spec.lambda2_values)
    grid = np.array([c.test_rmse for c in report.cells]).reshape(n1, n2)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(n2), [f"{v:g}" for v in spec.lambda2_values], rotation=45)
    ax.set_yticks(range(n1), [f"{v:g}" for v in spec.lambda1_values])
    ax.set_xlabel("lambda2")
    ax.set_ylabel("lambda1")
    bi, bj = divmod(report.best, n2)
    ax.plot(bj, bi, marker="*", markersize=14, color="tab:red")
    fig.colorbar(im, ax=ax, label="test RMSE")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
