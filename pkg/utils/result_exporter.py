import os
import io
import csv
import json
from typing import Dict

from components.experiments import RESULT_COLUMNS, ResultRow, ResultTable

INT_COLUMNS = ('trials', 'failures', 'seed')
FLOAT_COLUMNS = ('sweep_value', 'mean', 'stderr')

class ResultExporter:
    def export_table(self, table: ResultTable, format: str = 'csv') -> str:
        """Serialize a result table; CSV header and JSON keys are RESULT_COLUMNS"""
        records = table.to_records()
        if format == 'json':
            return json.dumps(records, indent=2)
        if format == 'csv':
            output = io.StringIO()
            writer = csv.DictWriter(output, fieldnames=list(RESULT_COLUMNS), lineterminator='\n')
            writer.writeheader()
            for record in records:
                writer.writerow({column: _csv_value(record[column]) for column in RESULT_COLUMNS})
            return output.getvalue()
        raise ValueError(f"unsupported format '{format}'")

    def emit_results(self, table: ResultTable, path: str, format: str = 'csv') -> Dict:
        """Write a result table to disk"""
        try:
            content = self.export_table(table, format)
            directory = os.path.dirname(path)
            if directory and not os.path.exists(directory):
                os.makedirs(directory)

            with open(path, 'w', encoding='utf-8', newline='') as f:
                f.write(content)

            return {
                'success': True,
                'file_path': path,
                'format': format,
                'row_count': len(table)
            }
        except Exception as e:
            return {
                'success': False,
                'error': str(e)
            }

    def load_results(self, path: str) -> Dict:
        """Read a CSV or JSON result file back into a ResultTable"""
        try:
            with open(path, 'r', encoding='utf-8', newline='') as f:
                content = f.read()

            if path.endswith('.csv'):
                records = list(csv.DictReader(io.StringIO(content)))
            else:
                records = json.loads(content)

            table = ResultTable([row_from_record(record) for record in records])
            return {
                'success': True,
                'file_path': path,
                'table': table,
                'row_count': len(table)
            }
        except Exception as e:
            return {
                'success': False,
                'error': str(e)
            }


def row_from_record(record: Dict) -> ResultRow:
    missing = [column for column in RESULT_COLUMNS if column not in record]
    if missing:
        raise ValueError(f"result record is missing {', '.join(missing)}")
    values = {column: record[column] for column in RESULT_COLUMNS}
    for column in INT_COLUMNS:
        values[column] = int(values[column])
    for column in FLOAT_COLUMNS:
        values[column] = float(values[column])
    return ResultRow(**values)


def _csv_value(value):
    # repr keeps full float precision; nan stays readable
    return repr(value) if isinstance(value, float) else value
