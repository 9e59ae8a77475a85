"""
Plot Service for covest
Handles figure emission from summary tables: SVG line charts with error bars
plus the plotted data as CSV
"""

import logging
import os

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

from covest.services.error_handling_service import ConfigError, EmptyResultError, ExportError
from covest.utils.export_utils import export_summary_to_csv

logger = logging.getLogger(__name__)


class PlotService:
    """Line charts of mean error against one grid axis"""

    PANEL_WIDTH = 5.0
    PANEL_HEIGHT = 4.0

    @staticmethod
    def plot_data(table, spec):
        """Rows of the summary the figure shows, sorted for drawing"""
        data = table[table['metric'] == spec.metric]
        if spec.estimators:
            data = data[data['estimator'].isin(spec.estimators)]
        for column in filter(None, (spec.x, spec.panel, spec.series)):
            if column not in table.columns:
                raise ConfigError(column, f'summary has no column {column!r}')
        if data.empty:
            raise EmptyResultError(f'no {spec.metric!r} rows to plot')
        order = [c for c in (spec.panel, spec.series, spec.x) if c]
        columns = list(dict.fromkeys(order + ['mean', 'sem', 'count', 'failures']))
        return data.sort_values(order, kind='stable')[columns].reset_index(drop=True)

    @staticmethod
    def emit_plot(table, spec, output=None):
        """
        Draw one panel per value of spec.panel and one series per spec.series value.

        Args:
            table (pd.DataFrame): summary from ExperimentService.summarize
            spec (PlotSpec): axes, metric, labels and scales
            output (str): SVG path, spec.output by default
        Returns:
            tuple: (svg path, data csv path)
        """
        path = output or spec.output
        if not path:
            raise ConfigError('output', 'plot needs an output path')
        data = PlotService.plot_data(table, spec)

        panels = list(data[spec.panel].unique()) if spec.panel else [None]
        fig, axes = plt.subplots(nrows=1, ncols=len(panels), squeeze=False,
                                 figsize=(PlotService.PANEL_WIDTH * len(panels), PlotService.PANEL_HEIGHT))

        for ax, panel in zip(axes[0], panels):
            panel_data = data if panel is None else data[data[spec.panel] == panel]
            for name, series in panel_data.groupby(spec.series, sort=False):
                ax.errorbar(series[spec.x], series['mean'], yerr=series['sem'],
                            marker='o', markersize=3, capsize=2, label=str(name))
            if spec.logx:
                ax.set_xscale('log')
            if spec.logy:
                ax.set_yscale('log')
            ax.set_xlabel(spec.xlabel or spec.x)
            ax.set_ylabel(spec.ylabel or spec.metric)
            if panel is not None:
                ax.set_title(f'{spec.panel} = {panel:g}' if isinstance(panel, float) else f'{spec.panel} = {panel}')
            ax.grid(True, alpha=0.3)
            ax.legend()

        if spec.title:
            fig.suptitle(spec.title)
        fig.tight_layout()

        try:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            fig.savefig(path, format='svg')
        except OSError as e:
            raise ExportError(f'cannot write {path}: {e}', path=str(path))
        finally:
            plt.close(fig)

        data_path = os.path.splitext(path)[0] + '_data.csv'
        export_summary_to_csv(data, data_path)
        logger.info(f"Plot written to {path} (data: {data_path})")
        return path, data_path
