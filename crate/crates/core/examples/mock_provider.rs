//! The deterministic mock provider answers every task offline. Requests carry
//! hints (gold label, gold SQL) that the mock can echo.

use practiq::provider::{complete_result, MockBehavior, MockProvider, Provider, ProviderRequest, Task};

fn main() {
    let echo = MockProvider::new(7);
    let constant = MockProvider::new(7).with_behavior(MockBehavior::Constant("answerable".into()));

    let classify = ProviderRequest::new(Task::NineWayClassify, "<question>Which stadium is the largest?</question>")
        .hint("gold_label", "Ambiguous_SELECT_Column");
    let predict = ProviderRequest::new(Task::PredictSql, "...").hint("gold_sql", "SELECT max(Capacity) FROM stadium");

    for (name, p) in [("oracle", &echo as &dyn Provider), ("constant", &constant)] {
        println!("{name}: classify -> {:?}", complete_result(p, &classify));
        println!("{name}: predict  -> {:?}", p.complete(&predict).map(|r| r.text));
    }

    let refusing = MockProvider::new(7).refusing(Task::Refine);
    let refine = ProviderRequest::new(Task::Refine, "conversation");
    println!("refusing: {:?}", refusing.complete(&refine).err());
}
