import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

from config import DATA_CONFIG, RESULTS_DIR


def format_number(value: Any) -> str:
    """CSV cell text: floats with 12 significant digits, None as an empty cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.{DATA_CONFIG['significant_digits']}g}"
    return str(value)


def round_for_json(value: Any) -> Any:
    """Floats rounded to 12 significant digits; NaN becomes null."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return None
        return float(f"{value:.{DATA_CONFIG['significant_digits']}g}")
    if isinstance(value, dict):
        return {key: round_for_json(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_for_json(item) for item in value]
    return value


def render_csv(rows: List[Dict[str, Any]]) -> str:
    if not rows:
        return ""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: format_number(value) for key, value in row.items()})
    return buffer.getvalue()


def render_json(data: Any) -> str:
    return json.dumps(round_for_json(data), indent=2, ensure_ascii=False) + "\n"


class ResultStorage:
    """Writes result tables; files are overwritten so reruns are byte-identical."""

    def __init__(self, output_dir: Optional[Path] = None):
        self.data_dir = Path(output_dir) if output_dir else RESULTS_DIR
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.logger = logging.getLogger(__name__)

    def save_rows_csv(self, rows: List[Dict[str, Any]], filename: str) -> Path:
        filepath = self.data_dir / filename
        with open(filepath, "w", newline="", encoding="utf-8") as csvfile:
            csvfile.write(render_csv(rows))
        self.logger.info(f"Saved {len(rows)} rows to {filepath}")
        return filepath

    def save_json(self, data: Any, filename: str) -> Path:
        filepath = self.data_dir / filename
        with open(filepath, "w", encoding="utf-8") as f:
            f.write(render_json(data))
        self.logger.info(f"Saved {filepath}")
        return filepath

    def load_csv(self, filename: str) -> List[Dict[str, str]]:
        filepath = self.data_dir / filename

        if not filepath.exists():
            self.logger.warning(f"CSV file not found: {filepath}")
            return []

        with open(filepath, "r", encoding="utf-8") as csvfile:
            data = list(csv.DictReader(csvfile))

        self.logger.info(f"Loaded {len(data)} records from {filepath}")
        return data
