# uncertainty/storage.py
"""
報告輸出：<out>/<scenario>/report.json、checks.csv、每個 series 一份 CSV 與 .dat plot 檔，
以及波函數的 CSV 存讀。同樣的輸入必須寫出逐位元相同的檔案，所以不寫時間戳記。
"""
import csv
import io
import json
import math
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from uncertainty.exceptions import ParameterError, ScenarioError
from uncertainty.grid import GridSpec, WaveFunction
from uncertainty.reports import TAG_INDEX, Report

CHECK_COLUMNS = ['tag', 'label', 'description', 'lhs', 'relation', 'rhs', 'tol', 'pass', 'margin']


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return '1' if value else '0'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return f"{value:.12g}"
    return str(value)


def _plain(value):
    """numpy 型別換成 JSON 可以寫的東西；非有限的浮點數寫成字串"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else format_value(value)
    return value


def atomic_write(path: Path, text: str) -> None:
    """先寫到同目錄的暫存檔再 os.replace，中途失敗不會留下半個檔案"""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\r\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def safe_name(name: str) -> str:
    return re.sub(r'[^A-Za-z0-9_.=-]', '_', name)


def plotdata_text(report: Report, name: str) -> str:
    """gnuplot 可直接讀的空白分隔檔；grid 類型在第一欄換值時插入空行"""
    if name not in report.series:
        raise ScenarioError(f"report {report.name!r} has no series {name!r}", field='series')
    series = report.series[name]
    lines = []
    if series.tag:
        lines.append(f"# {series.tag}: {TAG_INDEX.get(series.tag, '')}")
    if series.description:
        lines.append(f"# {series.description}")
    lines.append('# ' + ' '.join(series.columns))
    previous = None
    for row in series.rows:
        if series.kind == 'grid' and previous is not None and row[0] != previous:
            lines.append('')
        previous = row[0]
        lines.append(' '.join(format_value(v) for v in row))
    return '\n'.join(lines) + '\n'


def emit_plotdata(report: Report, name: str, out_dir: Path) -> Path:
    path = Path(out_dir) / f"{safe_name(name)}.dat"
    atomic_write(path, plotdata_text(report, name))
    return path


def write_report(report: Report, out_dir) -> Path:
    """寫出一個情境的所有檔案，回傳情境目錄"""
    target = Path(out_dir) / safe_name(report.name)
    atomic_write(target / 'report.json',
                 json.dumps(_plain(report.to_dict()), sort_keys=True, indent=2, ensure_ascii=False) + '\n')
    rows = []
    for c in report.checks:
        d = c.to_dict()
        rows.append([d[k] if k != 'pass' else d['passed'] for k in CHECK_COLUMNS])
    atomic_write(target / 'checks.csv', csv_text(CHECK_COLUMNS, rows))
    for name in sorted(report.series):
        series = report.series[name]
        atomic_write(target / f"{safe_name(name)}.csv", csv_text(series.columns, series.rows))
        emit_plotdata(report, name, target)
    return target


def save_wavefunction(path, psi: WaveFunction) -> None:
    """第一行是 '# {GridSpec JSON}'，之後每行 x,re,im (位置表示)"""
    grid = psi.grid
    amps = psi.position_amplitudes()
    header = '# ' + json.dumps(grid.to_dict(), sort_keys=True) + '\r\n'
    rows = zip(grid.x, amps.real, amps.imag)
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator='\r\n').writerows([format_value(v) for v in row] for row in rows)
    atomic_write(Path(path), header + buffer.getvalue())


def load_wavefunction(path, label: str = '') -> WaveFunction:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ScenarioError(f"cannot read wave function file {path}: {e}", field='path') from e
    lines = text.splitlines()
    if not lines or not lines[0].startswith('#'):
        raise ScenarioError(f"{path} has no '# {{grid}}' header line", field='path')
    try:
        grid = GridSpec.from_dict(json.loads(lines[0][1:]))
        rows = [[float(v) for v in row] for row in csv.reader(lines[1:]) if row]
    except (ValueError, KeyError, TypeError) as e:
        raise ScenarioError(f"malformed wave function file {path}: {e}", field='path') from e
    data = np.asarray(rows, dtype=float)
    if data.shape != (grid.n_points, 3):
        raise ScenarioError(f"{path} has {len(rows)} rows, expected {grid.n_points} rows of x,re,im", field='path')
    if np.max(np.abs(data[:, 0] - grid.x)) > 1e-6 * grid.dx:
        raise ParameterError(f"x column of {path} does not match its grid header")
    # WaveFunction 自己會檢查正規化
    return WaveFunction(grid=grid, amplitudes=data[:, 1] + 1j * data[:, 2], label=label or path.stem)
