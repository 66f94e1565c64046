"""
Plot-script emission.

The package never renders figures itself. It writes small standalone matplotlib
scripts next to the CSVs they read; running one with a matplotlib-enabled Python
produces the figure. Scripts open with the same '#' header as the CSVs.
"""
import logging
import os
from typing import Optional

from ..pipeline.persistence import header_lines

logger = logging.getLogger(__name__)

_PATTERN_TEMPLATE = '''"""Calibration pattern: excited-state probability over flux and delay."""
import matplotlib.pyplot as plt
import pandas as pd

frame = pd.read_csv({csv!r}, comment="#", index_col=0)
taus_us = [float(t) * 1e6 for t in frame.columns]
fluxes = frame.index.to_numpy()

fig, ax = plt.subplots(figsize=(7, 5))
mesh = ax.pcolormesh(taus_us, fluxes, frame.to_numpy(), shading="auto", vmin=0, vmax=1, cmap="viridis")
fig.colorbar(mesh, ax=ax, label={label!r})
ax.set_xlabel("delay time (us)")
ax.set_ylabel("flux (Phi0)")
ax.set_title({title!r})
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
'''

_TRACE_TEMPLATE = '''"""Single-qubit P|1> against two-qubit P|10> at a fixed flux."""
import matplotlib.pyplot as plt
import pandas as pd

frame = pd.read_csv({csv!r}, comment="#")
fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(frame["tau_s"] * 1e6, frame["p1_single"], label="N=1, P|1>")
ax.plot(frame["tau_s"] * 1e6, frame["p10_pair"], label="N=2, P|10>")
ax.set_xlabel("delay time (us)")
ax.set_ylabel("probability")
ax.legend()
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
'''

_SUMMARY_TEMPLATE = '''"""Averaged delays per step and accuracy against phase accumulation time."""
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

SUMMARIES = {summaries!r}

fig, (ax_delay, ax_accuracy) = plt.subplots(1, 2, figsize=(12, 5))
for label, path in SUMMARIES.items():
    frame = pd.read_csv(path, comment="#")
    ax_delay.plot(frame["l"], frame["delay_bar_s"] * 1e6, marker="o", label=label)
    ax_accuracy.loglog(frame["tau_bar_s"], frame["delta_phi_over_phi0"], marker="o", label=label)

times = np.logspace(*np.log10(ax_accuracy.get_xlim()), 50)
anchor_t, anchor_e = times[0], ax_accuracy.get_ylim()[1] / 2
ax_accuracy.loglog(times, anchor_e * (times / anchor_t) ** -0.5, "k--", lw=0.8, label="SQL")
ax_accuracy.loglog(times, anchor_e * (times / anchor_t) ** -1.0, "k:", lw=0.8, label="HL")

ax_delay.set_xlabel("step")
ax_delay.set_ylabel("averaged delay (us)")
ax_accuracy.set_xlabel("phase accumulation time (s)")
ax_accuracy.set_ylabel("flux accuracy (Phi0)")
ax_delay.legend()
ax_accuracy.legend()
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
'''


def _write(path: str, text: str, config: dict, seed: Optional[int]) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(header_lines(config, seed)) + "\n")
        f.write(text)
    logger.info("plot script written: %s", path)
    return path


def _png(path: str) -> str:
    return os.path.splitext(path)[0] + ".png"


def write_pattern_script(csv_path: str, script_path: str, config: dict, seed: Optional[int] = None,
                         title: str = "calibration pattern", label: str = "P|1>") -> str:
    csv = os.path.basename(csv_path)
    return _write(script_path, _PATTERN_TEMPLATE.format(
        csv=csv, title=title, label=label, png=os.path.basename(_png(script_path))
    ), config, seed)


def write_trace_script(csv_path: str, script_path: str, config: dict, seed: Optional[int] = None) -> str:
    return _write(script_path, _TRACE_TEMPLATE.format(
        csv=os.path.basename(csv_path), png=os.path.basename(_png(script_path))
    ), config, seed)


def write_summary_script(summary_paths: dict, script_path: str, config: dict, seed: Optional[int] = None) -> str:
    """``summary_paths`` maps sensor labels to summary CSV paths in the script's directory."""
    summaries = {label: os.path.basename(p) for label, p in summary_paths.items()}
    return _write(script_path, _SUMMARY_TEMPLATE.format(
        summaries=summaries, png=os.path.basename(_png(script_path))
    ), config, seed)

