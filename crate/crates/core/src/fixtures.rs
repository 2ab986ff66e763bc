//! Example inputs shared by tests, the command line self-tests and the
//! acceptance suite.

pub const COUNTED_LOOP: &str = include_str!("../fixtures/loops/counted.txt");
pub const LIST_LOOP: &str = include_str!("../fixtures/loops/list.txt");
pub const CHAIN_LOOP: &str = include_str!("../fixtures/loops/chain3.txt");
pub const BRANCHING_LOOP: &str = include_str!("../fixtures/loops/branching.txt");
pub const NESTED_LOOP: &str = include_str!("../fixtures/loops/nested.txt");
pub const BACKWARD_LOOP: &str = include_str!("../fixtures/loops/backward.txt");
pub const RECURSIVE: &str = include_str!("../fixtures/loops/recursive.txt");

/// The separable loop nests, each with the label of its outer loop.
pub const LOOP_NESTS: [(&str, &str); 5] = [
    ("counted", COUNTED_LOOP),
    ("list", LIST_LOOP),
    ("chain", CHAIN_LOOP),
    ("branching", BRANCHING_LOOP),
    ("nested", NESTED_LOOP),
];

pub const SHIFT_NEST: &str = include_str!("../fixtures/dep/shift_nest.txt");
pub const AVERAGING_NEST: &str = include_str!("../fixtures/dep/ex241_nest.txt");
pub const AVERAGING_PRED: &str = include_str!("../fixtures/dep/ex241.pred");
pub const DIAGONAL_PRED: &str = include_str!("../fixtures/dep/ex242.pred");
pub const CHAIN_PRED: &str = include_str!("../fixtures/dep/chain.pred");

pub const EXPENSES_LOOP: &str = include_str!("../fixtures/ring/expenses.txt");
pub const FOUR_LISTS_LOOP: &str = include_str!("../fixtures/ring/four_lists.txt");
pub const AUTOMATON_TABLE: &str = include_str!("../fixtures/ring/automaton.txt");
pub const EQUALIZE_START: [i64; 10] = [4, 56, 34, 10, 20, 50, 12, 73, 16, 23];

pub const SELECTION_PRINTED: &str = include_str!("../fixtures/setdef/ex451.txt");
pub const SELECTION_CORRECTED: &str = include_str!("../fixtures/setdef/ex451_fixed.txt");
pub const PAIRS_FORALL_EXISTS: &str = include_str!("../fixtures/setdef/remark460.txt");
pub const PAIRS_FORALL_FORALL: &str = include_str!("../fixtures/setdef/remark460_forall.txt");
pub const LABS: &str = include_str!("../fixtures/setdef/labs.txt");
pub const GRAPH_COMPONENT: &str = include_str!("../fixtures/setdef/graph.txt");
pub const NO_MAXIMUM: &str = include_str!("../fixtures/setdef/no_maximum.txt");

/// Set-definition fixtures small enough for exhaustive checks.
pub const SETDEF_FIXTURES: [(&str, &str); 7] = [
    ("selection-printed", SELECTION_PRINTED),
    ("selection-corrected", SELECTION_CORRECTED),
    ("pairs-forall-exists", PAIRS_FORALL_EXISTS),
    ("pairs-forall-forall", PAIRS_FORALL_FORALL),
    ("labs", LABS),
    ("graph", GRAPH_COMPONENT),
    ("no-maximum", NO_MAXIMUM),
];

pub const SUMMATION_DPS: &str = include_str!("../fixtures/dps/summation.dps");
pub const PRODUCER_CONSUMER: &str = include_str!("../fixtures/dps/producer_consumer.petri");
pub const MUTEX_NET: &str = include_str!("../fixtures/dps/mutex.petri");
