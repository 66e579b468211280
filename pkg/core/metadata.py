import hashlib
import os
import platform
import sys
import time
from contextlib import contextmanager
from datetime import datetime, timezone

import joblib
import numpy
import pandas
import scipy

from config import OUTPUT_CONFIG
from core.export import write_json


def file_sha256(path):
    """SHA-256 of a file's bytes"""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


def library_versions():
    return {
        'python': platform.python_version(),
        'numpy': numpy.__version__,
        'scipy': scipy.__version__,
        'pandas': pandas.__version__,
        'joblib': joblib.__version__,
    }


class RunManifest:
    """Everything needed to regenerate a run: command, inputs, seed, versions, outputs, timings"""

    def __init__(self, command, argv=None):
        self.command = command
        self.argv = list(sys.argv[1:] if argv is None else argv)
        self.started = datetime.now(timezone.utc)
        self.inputs = {}
        self.settings = {}
        self.outputs = []
        self.timings = {}
        self.exit_code = None
        self.error = None

    def record_input(self, path):
        if path and os.path.isfile(path):
            self.inputs[os.path.abspath(path)] = file_sha256(path)

    def record_setting(self, name, value):
        self.settings[name] = value

    def add_output(self, path):
        self.outputs.append(os.path.abspath(path))

    @contextmanager
    def stage(self, name):
        """Accumulate wall time spent in a named stage"""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    def finish(self, exit_code, error=None):
        self.exit_code = exit_code
        self.error = None if error is None else str(error)

    def to_dict(self):
        return {
            'command': self.command,
            'argv': self.argv,
            'started_utc': self.started.isoformat(),
            'finished_utc': datetime.now(timezone.utc).isoformat(),
            'exit_code': self.exit_code,
            'error': self.error,
            'inputs': self.inputs,
            'settings': self.settings,
            'outputs': self.outputs,
            'timings_s': self.timings,
            'versions': library_versions(),
        }

    def write(self, out_dir):
        path = os.path.join(out_dir, OUTPUT_CONFIG['manifest_filename'])
        return write_json(self.to_dict(), path)
