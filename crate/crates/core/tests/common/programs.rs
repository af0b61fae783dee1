//! Hand-written generated-program stand-ins and the test worker.

use std::path::PathBuf;

use genplan_core::executor::WorkerCommand;

pub fn shim_worker() -> WorkerCommand {
    let shim = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/plan_shim.py");
    WorkerCommand::new("python3", [shim.to_string_lossy().into_owned()])
}

/// Gripper solver that reads the robot position from the initial state.
pub const GRIPPER: &str = r#"
def get_plan(objects, init, goal):
    grippers = sorted(name for name, kind in objects if kind == 'gripper')
    robby = next(fact[1] for fact in init if fact[0] == 'at-robby')
    where = {fact[1]: fact[2] for fact in init if fact[0] == 'at'}
    plan = []
    for sign, pred, *args in sorted(goal):
        if not sign or pred != 'at':
            continue
        ball, room = args
        if where[ball] == room:
            continue
        if robby != where[ball]:
            plan.append('(move %s %s)' % (robby, where[ball]))
            robby = where[ball]
        plan.append('(pick %s %s %s)' % (ball, robby, grippers[0]))
        plan.append('(move %s %s)' % (robby, room))
        robby = room
        plan.append('(drop %s %s %s)' % (ball, room, grippers[0]))
        where[ball] = room
    return plan
"#;

/// Same solver, but it assumes the robot starts in the first listed room.
pub const GRIPPER_ORDER_SENSITIVE: &str = r#"
def get_plan(objects, init, goal):
    grippers = sorted(name for name, kind in objects if kind == 'gripper')
    robby = [name for name, kind in objects if kind == 'room'][0]
    where = {fact[1]: fact[2] for fact in init if fact[0] == 'at'}
    plan = []
    for sign, pred, *args in sorted(goal):
        if not sign or pred != 'at':
            continue
        ball, room = args
        if where[ball] == room:
            continue
        if robby != where[ball]:
            plan.append('(move %s %s)' % (robby, where[ball]))
            robby = where[ball]
        plan.append('(pick %s %s %s)' % (ball, robby, grippers[0]))
        plan.append('(move %s %s)' % (robby, room))
        robby = room
        plan.append('(drop %s %s %s)' % (ball, room, grippers[0]))
        where[ball] = room
    return plan
"#;

pub const SLEEPS: &str = "import time\ndef get_plan(objects, init, goal):\n    while True:\n        time.sleep(0.05)\n";

pub const RAISES: &str = "def get_plan(objects, init, goal):\n    return [str(1 / 0)]\n";

pub const RETURNS_INT: &str = "def get_plan(objects, init, goal):\n    return 42\n";
