"""
Export Utilities for covest
Handles result persistence: the incremental CSV sink, reading result files back,
and summary tables as CSV or Excel
"""

import csv
import logging
import os

import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Font, PatternFill, Alignment
from openpyxl.utils.dataframe import dataframe_to_rows

from covest.models.experiment_model import ResultRow
from covest.services.error_handling_service import EmptyResultError, ExportError

logger = logging.getLogger(__name__)


def _prepare_path(path):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        raise ExportError(f'cannot create {directory}: {e}', path=str(path))
    return path


class ResultCsvSink:
    """
    Writes result rows as they arrive. The header goes out first and every batch
    is flushed, so an interrupted run leaves a valid prefix.
    """

    def __init__(self, path):
        self.path = _prepare_path(path)
        self._file = None
        self._writer = None
        self.count = 0

    def __enter__(self):
        try:
            self._file = open(self.path, 'w', newline='', encoding='utf-8')
        except OSError as e:
            raise ExportError(f'cannot write {self.path}: {e}', path=str(self.path))
        self._writer = csv.writer(self._file, lineterminator='\n')
        self._writer.writerow(ResultRow.FIELDS)
        self._file.flush()
        return self

    def write_rows(self, rows):
        for row in rows:
            self._writer.writerow(row.to_csv_row())
        self.count += len(rows)
        self._file.flush()

    def __exit__(self, exc_type, exc, tb):
        self._file.close()
        logger.info(f"Wrote {self.count} rows to {self.path}")
        return False


def read_result_rows(path):
    """Parse a result CSV back into ResultRow objects"""
    try:
        with open(path, newline='', encoding='utf-8') as csvfile:
            reader = csv.reader(csvfile)
            header = next(reader, None)
            if header is None:
                raise EmptyResultError(f'{path} is empty')
            if tuple(header) != ResultRow.FIELDS:
                raise ExportError(f'{path} is not a covest result file', path=str(path))
            return [ResultRow.from_csv_row(cells) for cells in reader if cells]
    except OSError as e:
        raise ExportError(f'cannot read {path}: {e}', path=str(path))


def summary_path(results_path, suffix='.csv'):
    """results/fig4.csv -> results/fig4_summary.csv"""
    stem, _ = os.path.splitext(results_path)
    return f'{stem}_summary{suffix}'


def export_summary_to_csv(table, path):
    """Write a summary DataFrame as UTF-8 CSV with LF line endings"""
    try:
        _prepare_path(path)
        table.to_csv(path, index=False, lineterminator='\n')
    except OSError as e:
        raise ExportError(f'cannot write {path}: {e}', path=str(path))
    return path


def export_summary_to_excel(table, path, title='Summary'):
    """
    Export a summary DataFrame to an Excel workbook
    Args:
        table (pd.DataFrame): summary table
        path (str): output .xlsx path
        title (str): worksheet title
    Returns:
        str: Path to created file
    """
    if table.empty:
        raise EmptyResultError('nothing to export')

    wb = Workbook()
    ws = wb.active
    ws.title = title[:31]

    header_fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
    header_font = Font(color="FFFFFF", bold=True)

    failed_fill = PatternFill(start_color="FEE2E2", end_color="FEE2E2", fill_type="solid")

    for r in dataframe_to_rows(table, index=False, header=True):
        ws.append(r)

    # Format header
    for cell in ws[1]:
        cell.fill = header_fill
        cell.font = header_font
        cell.alignment = Alignment(horizontal="center")

    # Highlight groups with failed trials
    if 'failures' in table.columns:
        failures_col = list(table.columns).index('failures') + 1
        for row_idx in range(2, ws.max_row + 1):
            if ws.cell(row=row_idx, column=failures_col).value:
                for col_idx in range(1, len(table.columns) + 1):
                    ws.cell(row=row_idx, column=col_idx).fill = failed_fill

    # Auto-adjust column widths
    for column in ws.columns:
        max_length = max(len(str(cell.value)) if cell.value is not None else 0 for cell in column)
        ws.column_dimensions[column[0].column_letter].width = min((max_length + 2) * 1.2, 50)

    try:
        _prepare_path(path)
        wb.save(path)
    except OSError as e:
        raise ExportError(f'cannot write {path}: {e}', path=str(path))

    logger.info(f"Exported {len(table)} summary rows to {path}")
    return path


def read_summary(path):
    try:
        return pd.read_csv(path)
    except OSError as e:
        raise ExportError(f'cannot read {path}: {e}', path=str(path))
