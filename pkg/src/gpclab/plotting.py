"""SVG line charts of trace columns against k."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .simkit import read_trace  # noqa: E402

DEFAULT_COLUMNS = ("y_ref", "y")


def plot_trace(csv_path, out_svg, columns=DEFAULT_COLUMNS, title=None) -> None:
    """Render ``columns`` of a trace CSV.  Identical input gives identical bytes."""
    data = read_trace(csv_path, required=("k", *columns))
    with matplotlib.rc_context({"svg.hashsalt": "gpclab", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 4))
        try:
            for c in columns:
                ax.plot(data["k"], data[c], label=c, linewidth=1.0)
            ax.set_xlabel("k")
            ax.grid(True, linewidth=0.3)
            ax.legend()
            if title:
                ax.set_title(title)
            fig.tight_layout()
            fig.savefig(out_svg, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
