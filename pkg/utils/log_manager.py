import os
import re
import json
from collections import Counter
from datetime import datetime
from typing import Dict, List

# [timestamp] [LEVEL] [TYPE] message
LOG_LINE = re.compile(r"^\[(?P<timestamp>[^\]]*)\] \[(?P<level>[A-Z]+)\] \[(?P<type>[A-Z_]+)\] (?P<message>.*)$")

class LogManager:
    def __init__(self, log_dir: str = "logs"):
        self.log_dir = log_dir
        os.makedirs(self.log_dir, exist_ok=True)

    def get_log_file_path(self, run_name: str) -> str:
        """Log file for a run; dots, slashes and spaces become underscores"""
        safe_name = re.sub(r"[./ ]", "_", run_name)
        return os.path.join(self.log_dir, f"{safe_name}_log.txt")

    def add_log_entry(self, run_name: str, log_type: str, message: str, level: str = "info") -> Dict:
        """Append one line to the run's log file"""
        timestamp = datetime.now().strftime('%Y-%m-%d %H:%M:%S')
        try:
            with open(self.get_log_file_path(run_name), 'a', encoding='utf-8') as f:
                f.write(f"[{timestamp}] [{level.upper()}] [{log_type}] {message}\n")
        except OSError as e:
            return {'success': False, 'error': str(e)}
        return {'success': True, 'run': run_name, 'timestamp': timestamp, 'level': level}

    def load_run_logs(self, run_name: str) -> List[Dict]:
        """Parsed entries of a run, oldest first; unparseable lines are skipped"""
        log_path = self.get_log_file_path(run_name)
        if not os.path.exists(log_path):
            return []
        with open(log_path, 'r', encoding='utf-8') as f:
            matches = (LOG_LINE.match(line.rstrip('\n')) for line in f)
            return [m.groupdict() for m in matches if m]

    def get_run_summary(self, run_name: str) -> Dict:
        """Entry counts per level and type, and an overall status"""
        logs = self.load_run_logs(run_name)
        levels = Counter(log['level'] for log in logs)
        types = Counter(log['type'] for log in logs)

        if levels['ERROR']:
            status = 'error'
        elif levels['WARNING']:
            status = 'warning'
        else:
            status = 'healthy' if logs else 'unknown'

        return {
            'run': run_name,
            'status': status,
            'total_logs': len(logs),
            'error_count': levels['ERROR'],
            'warning_count': levels['WARNING'],
            'point_count': types['POINT'],
            'failure_count': types['FAILURE'],
            'last_activity': logs[-1]['timestamp'] if logs else 'Never'
        }

    def log_sweep_start(self, run_name: str, experiment: str, points: int, trials: int):
        """Log the start of a sweep"""
        return self.add_log_entry(run_name, "SWEEP", f"{experiment}: {points} points x {trials} trials", "info")

    def log_point(self, run_name: str, label: str):
        """Log a finished sweep point"""
        return self.add_log_entry(run_name, "POINT", f"finished {label}", "info")

    def log_failure(self, run_name: str, message: str):
        return self.add_log_entry(run_name, "FAILURE", message, "warning")

    def log_timing(self, run_name: str, estimator: str, label: str, seconds: float, trials: int):
        """Log estimator wall time at a sweep point"""
        per_trial = seconds / trials if trials else 0.0
        return self.add_log_entry(
            run_name, "TIMING", f"{estimator} at {label}: {seconds:.3f}s total, {per_trial * 1e3:.2f}ms/trial", "info")

    def log_error(self, run_name: str, error: str):
        return self.add_log_entry(run_name, "ERROR", error, "error")

    def log_info(self, run_name: str, message: str):
        return self.add_log_entry(run_name, "INFO", message, "info")

    def export_run_logs(self, run_name: str, format: str = 'txt') -> Dict:
        """Render a run's log as plain text (with a header) or as a JSON list"""
        if format not in ('txt', 'json'):
            return {'success': False, 'error': f"unsupported format '{format}'", 'run': run_name}
        logs = self.load_run_logs(run_name)
        if format == 'json':
            content = json.dumps(logs, indent=2)
        else:
            header = [f"# Logs for {run_name}", f"# Exported: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}", ""]
            body = [f"[{log['timestamp']}] [{log['level']}] [{log['type']}] {log['message']}" for log in logs]
            content = "\n".join(header + body) + "\n"
        return {
            'success': True,
            'run': run_name,
            'format': format,
            'content': content,
            'log_count': len(logs)
        }
