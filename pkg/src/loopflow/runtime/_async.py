from typing import Optional

import anyio
import anyio.to_thread

from loopflow._utils.exception import LoopflowError, MissionAborted
from loopflow.schemas import LogLevel, Scenario

from ._context import MissionHooks
from ._runner import MissionResult, MissionRunner


async def run_mission_async(
    scenario: Scenario,
    hooks: Optional[MissionHooks] = None,
    verbose: bool = False,
    record_trajectory: bool = False,
    time_scale: float = 1.0,
) -> MissionResult:
    """
    Free-running mission: the control loop and the planner run concurrently.

    The control task advances the simulated clock, sleeping `time_scale`
    wall seconds per simulated second, and publishes a world snapshot every
    tick. The planner task reads the latest world snapshot, solves on a
    worker thread and commits the outcome back on the event loop, so the
    worker never writes runner state; neither side waits for the other.
    Results depend on thread timing and are not reproducible.

    Raises:
        MissionAborted: Carries the metrics gathered up to the abort.
    """
    runner = MissionRunner(scenario, hooks=hooks, verbose=verbose, record_trajectory=record_trajectory, name="async")
    errors: list[Exception] = []
    runner.start()
    stop = anyio.Event()
    pause = runner.dt * time_scale

    async def control():
        try:
            while not runner.finished and not stop.is_set():
                runner.control_tick()
                runner.publish_world()
                await anyio.sleep(pause)
        finally:
            stop.set()

    async def planner():
        while not stop.is_set():
            world = runner.world.latest()
            trigger = runner.due(world) if world is not None else None
            if trigger is None:
                await anyio.sleep(pause)
                continue
            try:
                # Only `compute` leaves the event loop; bookkeeping and publishing
                # happen here, between control ticks.
                outcome = await anyio.to_thread.run_sync(runner.compute, world, trigger, len(runner.replans))
                runner.commit(world, outcome)
            except LoopflowError as e:
                errors.append(e)
                runner.ctx._log(f"[ASYNC] planner stopped: {e}", LogLevel.ERROR)
                stop.set()

    async with anyio.create_task_group() as tg:
        tg.start_soon(control)
        tg.start_soon(planner)

    if errors:
        error = errors[0]
        if isinstance(error, MissionAborted):
            raise error
        raise MissionAborted(f"Mission aborted: {error}", metrics=runner.metrics(), original_error=error)
    return runner.result()
