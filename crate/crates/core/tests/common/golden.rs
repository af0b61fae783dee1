//! Synthetic outcomes for every feedback row, paired with golden files.

use genplan_core::feedback::{FeedbackCategory, ProgramOutcome};
use genplan_core::pddl::{GroundAtom, GroundLiteral};
use genplan_core::validator::ValidationOutcome;

fn produced(plan: &[&str], validation: ValidationOutcome) -> ProgramOutcome {
    ProgramOutcome::PlanProduced {
        plan_text: plan.join("\n"),
        validation,
    }
}

pub fn cases() -> Vec<(FeedbackCategory, ProgramOutcome)> {
    use FeedbackCategory as C;
    use ValidationOutcome as V;
    vec![
        (C::Timeout, ProgramOutcome::Timeout { limit_seconds: 45.0 }),
        (
            C::Exception,
            ProgramOutcome::RuntimeException {
                traceback: "Traceback (most recent call last):\n  line 3, in get_plan\nZeroDivisionError: division by zero"
                    .into(),
            },
        ),
        (C::WrongOutputType, ProgramOutcome::WrongOutputType { output_repr: "42".into() }),
        (
            C::UnknownObject,
            produced(
                &["(pick b1 rx g)", "(move ra rb)"],
                V::UnknownObject {
                    step_index: 1,
                    token: "rx".into(),
                    action_text: "(pick b1 rx g)".into(),
                },
            ),
        ),
        (
            C::UnknownAction,
            produced(
                &["(pick b1 ra g)", "(fly ra rb)"],
                V::UnknownAction {
                    step_index: 2,
                    name: "fly".into(),
                    action_text: "(fly ra rb)".into(),
                },
            ),
        ),
        (
            C::ArityMismatch,
            produced(
                &["(pick b1 ra g)", "(move ra rb g)", "(drop b1 rb g)"],
                V::ArityMismatch {
                    step_index: 2,
                    name: "move".into(),
                    expected_count: 2,
                    given_count: 3,
                    action_text: "(move ra rb g)".into(),
                },
            ),
        ),
        (
            C::DynamicPrecondition,
            produced(
                &["(move ra rb)", "(pick b1 ra g)"],
                V::UnsatDynamicPrecondition {
                    step_index: 2,
                    action_text: "(pick b1 ra g)".into(),
                    failed_literals: vec![
                        GroundLiteral::pos(GroundAtom::new("at-robby", ["ra"])),
                        GroundLiteral::pos(GroundAtom::new("at", ["b1", "ra"])),
                    ],
                },
            ),
        ),
        (
            C::StaticPrecondition,
            produced(
                &["(drive-truck t1 l0-0 l1-0 c1)"],
                V::UnsatStaticPrecondition {
                    step_index: 1,
                    action_text: "(drive-truck t1 l0-0 l1-0 c1)".into(),
                    failed_literals: vec![GroundLiteral::pos(GroundAtom::new("in-city", ["l0-0", "c1"]))],
                },
            ),
        ),
        (
            C::GoalNotReached,
            produced(
                &["(move ra rb)", "(move rb ra)"],
                V::GoalNotReached {
                    unsat_positive_goals: vec![
                        GroundAtom::new("at", ["b1", "rb"]),
                        GroundAtom::new("at-robby", ["rb"]),
                    ],
                    unsat_negative_goals: vec![GroundAtom::new("at", ["b1", "ra"])],
                },
            ),
        ),
    ]
}

/// Expected rendering for a row, without the file's final newline.
pub fn golden(category: FeedbackCategory) -> &'static str {
    use FeedbackCategory as C;
    let text = match category {
        C::Timeout => include_str!("../golden/row_1.txt"),
        C::Exception => include_str!("../golden/row_2.txt"),
        C::WrongOutputType => include_str!("../golden/row_3.txt"),
        C::UnknownObject => include_str!("../golden/row_4_1.txt"),
        C::UnknownAction => include_str!("../golden/row_4_2.txt"),
        C::ArityMismatch => include_str!("../golden/row_4_3.txt"),
        C::DynamicPrecondition => include_str!("../golden/row_4_4.txt"),
        C::StaticPrecondition => include_str!("../golden/row_4_5.txt"),
        C::GoalNotReached => include_str!("../golden/row_4_6.txt"),
    };
    text.strip_suffix('\n').unwrap_or(text)
}
