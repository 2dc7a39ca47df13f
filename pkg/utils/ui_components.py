"""
UI components for the interactive BD-RIS explorer.
"""

import logging

import numpy as np
from pydantic import ValidationError

from models.config import RisConfig, ScenarioConfig, SolverOptions
from models.errors import BdrisError
from optimization.bcd import run_bcd
from simulation.channel_model import generate_channel_set
from simulation.metrics import beampattern_table

from .file_utils import BCD_TRACE_COLUMNS, BEAMPATTERN_COLUMNS

logger = logging.getLogger(__name__)

ARCHITECTURES = ["single", "group", "full"]
BEAMPATTERN_STEP_DEG = 1.0


def run_single_solve(
    architecture,
    group_size,
    reciprocal,
    structural,
    n_elements,
    angle_dl,
    angle_ul,
    alpha_dl,
    seed,
    direct_blocked=True,
):
    """Solve one single-user scenario and format it for the explorer.

    Returns:
        Tuple (summary markdown, BCD trace rows, beampattern rows). On an
        invalid input the summary carries the error and both tables are empty.
    """
    try:
        scenario = ScenarioConfig(
            n_ris_elements=int(n_elements),
            angles_dl_deg=(float(angle_dl),),
            angles_ul_deg=(float(angle_ul),),
            alpha_dl=float(alpha_dl),
            rng_seed=int(seed),
            direct_links_blocked=bool(direct_blocked),
        )
        ris = RisConfig(
            architecture=architecture,
            group_size=int(group_size) if architecture == "group" else None,
            reciprocal=bool(reciprocal) and architecture != "single",
            structural_scattering=bool(structural),
        )
        ch = generate_channel_set(scenario, ris)
        result = run_bcd(ch, ris, scenario, SolverOptions())
    except (BdrisError, ValidationError) as e:
        logger.warning("explorer solve rejected: %s", e)
        return f"**Error:** {str(e).splitlines()[0]}", [], []

    summary = (
        f"### {architecture} RIS, {'reciprocal' if ris.reciprocal else 'non-reciprocal'}\n"
        f"- DL rate: {result.dl_rate:.4f} bits/s/Hz\n"
        f"- UL rate: {result.ul_rate:.4f} bits/s/Hz\n"
        f"- Sum rate: {result.sum_rate:.4f} bits/s/Hz\n"
        f"- BCD iterations: {result.iters_used} (converged: {result.converged})\n"
        f"- PDD violation: {result.pdd_violation:.2e}"
    )
    trace_rows = [
        [row.iteration, row.objective, row.dl_rate, row.ul_rate, row.pdd_violation] for row in result.trace
    ]
    grid = np.arange(0.0, 180.0 + 1e-9, BEAMPATTERN_STEP_DEG)
    table = beampattern_table(result.final_state, ch, ris, grid)
    beam_rows = [list(map(float, row)) for row in zip(*(table[name] for name in BEAMPATTERN_COLUMNS))]
    return summary, trace_rows, beam_rows


def create_application():
    """Create the complete application with UI and event handlers"""
    import gradio as gr

    with gr.Blocks() as app:
        gr.Markdown("# BD-RIS Full-Duplex Explorer")
        gr.Markdown("Jointly optimize precoder, combiner and RIS scattering matrix for one channel draw.")

        with gr.Row():
            with gr.Column(scale=1):
                architecture = gr.Dropdown(label="Architecture", choices=ARCHITECTURES, value="full")
                group_size = gr.Number(label="Group size (group architecture)", value=4, precision=0)
                reciprocal = gr.Checkbox(label="Reciprocal", value=False)
                structural = gr.Checkbox(label="Structural scattering", value=True)
                direct_blocked = gr.Checkbox(label="Direct links blocked", value=True)
                n_elements = gr.Slider(label="RIS elements M", minimum=2, maximum=64, step=2, value=16)
                angle_dl = gr.Slider(label="DL user angle (deg)", minimum=0, maximum=180, step=1, value=90)
                angle_ul = gr.Slider(label="UL user angle (deg)", minimum=0, maximum=180, step=1, value=60)
                alpha_dl = gr.Slider(label="DL priority alpha", minimum=0, maximum=1, step=0.05, value=0.5)
                seed = gr.Number(label="Seed", value=0, precision=0)
                solve_btn = gr.Button("Solve", variant="primary")

            with gr.Column(scale=2):
                summary = gr.Markdown("Pick a scenario and press Solve.")
                with gr.Tabs():
                    with gr.Tab("Objective Trace"):
                        trace_table = gr.Dataframe(headers=list(BCD_TRACE_COLUMNS))
                    with gr.Tab("Beampatterns"):
                        beam_table = gr.Dataframe(headers=list(BEAMPATTERN_COLUMNS))

        solve_btn.click(
            run_single_solve,
            inputs=[
                architecture,
                group_size,
                reciprocal,
                structural,
                n_elements,
                angle_dl,
                angle_ul,
                alpha_dl,
                seed,
                direct_blocked,
            ],
            outputs=[summary, trace_table, beam_table],
        )

    return app
