from __future__ import annotations

import hashlib
import json
import logging
import os

import numpy as np

from core.fit import GpdFit

logger = logging.getLogger(__name__)


def fingerprint(values) -> str:
    """SHA-256 of the float64 bytes of values, in their given order"""
    data = np.ascontiguousarray(np.asarray(values, dtype='<f8'))
    return hashlib.sha256(data.tobytes()).hexdigest()


class FitCache:
    """Stores fitted GPD models in a JSON file so later subcommands reuse the same fit"""

    def __init__(self, cache_file: str):
        self.cache_file = cache_file
        self.cache_data = {}
        self._load_cache()

    @staticmethod
    def make_key(dataset: str, threshold: float) -> str:
        return f"{dataset}@{float(threshold)!r}"

    def _load_cache(self) -> None:
        """Load cache data from file if it exists"""
        if not os.path.exists(self.cache_file):
            logger.debug("No existing fit cache at %s", self.cache_file)
            return
        try:
            with open(self.cache_file, 'r', encoding='utf-8') as f:
                self.cache_data = json.load(f)
            logger.info("Loaded %d fits from %s", len(self.cache_data), self.cache_file)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning("Error loading fit cache, starting empty: %s", e)
            self.cache_data = {}

    def save_cache(self) -> None:
        """Write the cache atomically"""
        directory = os.path.dirname(os.path.abspath(self.cache_file))
        os.makedirs(directory, exist_ok=True)
        tmp = self.cache_file + '.tmp'
        with open(tmp, 'w', encoding='utf-8') as f:
            json.dump(self.cache_data, f, indent=2, sort_keys=True)
        os.replace(tmp, self.cache_file)
        logger.debug("Saved %d fits to %s", len(self.cache_data), self.cache_file)

    def get_fit(self, dataset: str, threshold: float, values) -> GpdFit | None:
        """Cached fit for (dataset, threshold) if it was made on the same values"""
        entry = self.cache_data.get(self.make_key(dataset, threshold))
        if entry is None:
            return None
        if entry['fingerprint'] != fingerprint(values):
            logger.info("Data changed since %s was fitted at u=%g; refitting", dataset, threshold)
            return None
        return GpdFit.from_dict(entry['fit'])

    def update_fit(self, dataset: str, threshold: float, values, fit: GpdFit) -> None:
        self.cache_data[self.make_key(dataset, threshold)] = {
            'fingerprint': fingerprint(values),
            'fit': fit.to_dict(),
        }
