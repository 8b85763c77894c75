// temporary diagnostic: memorization + entropy separation per seed
use unlearn_core::analysis::prs::entropy_scores;
use unlearn_core::nn::{accuracy, Model};
use unlearn_core::unlearn::train;
use unlearn_harness::config::{Config, ExperimentSetup};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = Config::new();
    for kv in &args {
        let (k, v) = kv.split_once('=').unwrap();
        cfg.set(k, v).unwrap();
    }
    let setup = ExperimentSetup::from_config(&cfg).unwrap();
    let model0 = Model::init(setup.model_spec.clone(), setup.model_seed);
    let (model, _run) = train(&model0, &setup.dataset, &setup.train).unwrap();
    let train_batch = setup.dataset.batch(&setup.dataset.train_idx).unwrap();
    let test_batch = setup.dataset.batch(&setup.dataset.test_idx).unwrap();
    let tr_acc = accuracy(&model, &train_batch).unwrap();
    let te_acc = accuracy(&model, &test_batch).unwrap();
    let m_scores = entropy_scores(&model, &train_batch).unwrap();
    let n_scores = entropy_scores(&model, &test_batch).unwrap();
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let med = |v: &Vec<f64>| { let mut s = v.clone(); s.sort_by(|a,b| a.partial_cmp(b).unwrap()); s[s.len()/2] };
    println!(
        "train_acc={tr_acc:.3} test_acc={te_acc:.3} member_entropy mean={:.4} med={:.4} | nonmember mean={:.4} med={:.4}",
        mean(&m_scores), med(&m_scores), mean(&n_scores), med(&n_scores)
    );
}
