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
from typing import Any, Dict, Optional

class CrestError(Exception):

    # base class for every error raised by this package

    pass

class ParseError(CrestError):

    def __init__(self, 
            message: str, 
            line: Optional[int] = None,
            source: Optional[str] = None):

        self.line = line
        self.source = source

        where = ""
        if source is not None:
            where += f"{source}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"

        super().__init__(f"{where}: {message}" if where else message)

class InstanceError(CrestError):

    pass

class PlanError(CrestError):

    pass

class PlannerFailure(CrestError):

    pass

class InfeasibleSpec(CrestError):

    pass

class BudgetExceeded(CrestError):

    pass

class InvariantViolation(CrestError):

    def __init__(self, 
            message: str, 
            snapshot: Optional[Dict[str, Any]] = None):

        self.snapshot = snapshot if snapshot is not None else {}

        super().__init__(message)
