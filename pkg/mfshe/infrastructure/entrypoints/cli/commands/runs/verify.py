from pathlib import Path

from mfshe.application.use_cases.verify_run import RunReport
from mfshe.application.use_cases.verify_run import VerifyReport
from mfshe.application.use_cases.verify_run import VerifyRunUseCase
from mfshe.application.use_cases.verify_run import load_run_report
from mfshe.infrastructure.entrypoints.cli.dependencies import get_run_repository


async def verify_logic(run_dir: Path) -> VerifyReport:
    use_case = VerifyRunUseCase(repository=get_run_repository(run_dir.parent))
    return await use_case.execute(run_dir)


async def report_logic(run_dir: Path) -> RunReport:
    return await load_run_report(run_dir, get_run_repository(run_dir.parent))
