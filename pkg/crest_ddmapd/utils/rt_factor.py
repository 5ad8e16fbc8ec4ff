# Copyright (C) 2023  Andrea Patrizi (AndrePatri, andreapatrizi1b6e6@gmail.com)
# 
# This file is part of CrestDDMAPD and distributed under the General Public License version 2 license.
# 
# CrestDDMAPD is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 2 of the License, or
# (at your option) any later version.
# 
# CrestDDMAPD is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
# 
# You should have received a copy of the GNU General Public License
# along with CrestDDMAPD.  If not, see <http://www.gnu.org/licenses/>.
# 
import time

from contextlib import contextmanager
from typing import Dict

class RtFactor():

    """ Wall-clock accounting of an execution run, split by phase. """

    def __init__(self):

        self._phase_times: Dict[str, float] = {}
        self._phase_counts: Dict[str, int] = {}

        self._start_time = time.perf_counter()

    @contextmanager
    def measure(self, phase: str):

        t0 = time.perf_counter()

        try:

            yield

        finally:

            self._phase_times[phase] = self._phase_times.get(phase, 0.0) + time.perf_counter() - t0
            self._phase_counts[phase] = self._phase_counts.get(phase, 0) + 1

    def elapsed(self) -> float:

        return time.perf_counter() - self._start_time

    def get_phase_times(self) -> Dict[str, float]:

        return dict(self._phase_times)

    def get_phase_counts(self) -> Dict[str, int]:

        return dict(self._phase_counts)

    def get_avrg_time(self, units: int) -> float:

        # e.g. seconds per shelf or per step

        return self.elapsed() / units if units > 0 else 0.0

    def reset(self):

        self._phase_times = {}
        self._phase_counts = {}

        self._start_time = time.perf_counter()
