"""
Run Monitor Module
Elapsed time, memory and CPU figures for a command run, using psutil.
"""

import logging
import time
from typing import Any, Dict

import psutil

logger = logging.getLogger(__name__)


class RunMonitor:
    """
    Measures a single command run. Figures go to the log only, never into
    reports, so report output stays identical across runs.
    """

    def __init__(self):
        self.process = psutil.Process()
        self.start_time = time.time()
        self.start_cpu = self.process.cpu_times()

    def start(self) -> None:
        self.start_time = time.time()
        self.start_cpu = self.process.cpu_times()

    def get_usage(self) -> Dict[str, Any]:
        """
        Get resource usage since start().

        Returns:
            Dict with elapsed seconds, CPU seconds, RSS in MB and CPU percent
        """
        try:
            elapsed = time.time() - self.start_time
            cpu = self.process.cpu_times()
            cpu_seconds = (cpu.user - self.start_cpu.user) + (cpu.system - self.start_cpu.system)
            memory = self.process.memory_info()
            return {
                'elapsed_seconds': round(elapsed, 3),
                'cpu_seconds': round(cpu_seconds, 3),
                'rss_mb': round(memory.rss / (1024 * 1024), 1),
                'cpu_percent': round(100.0 * cpu_seconds / elapsed, 1) if elapsed > 0 else 0.0,
            }
        except (psutil.Error, OSError) as e:
            return {'error': f'Failed to read process usage: {str(e)}'}

    def log_usage(self, command: str) -> Dict[str, Any]:
        usage = self.get_usage()
        if 'error' in usage:
            logger.warning('%s: %s', command, usage['error'])
        else:
            logger.info('%s finished in %.3fs (cpu %.3fs, rss %.1f MB, cpu %.1f%%)', command,
                        usage['elapsed_seconds'], usage['cpu_seconds'], usage['rss_mb'],
                        usage['cpu_percent'])
        return usage
