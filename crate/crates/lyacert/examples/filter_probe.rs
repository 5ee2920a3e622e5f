// quick probe: filter Method I at theta 0.98
use lyacert::casestudy::parse_filter;
use lyacert::pipeline::{certify_min_level, uniform_alpha, uniform_rates, BisectOpts};
use lyacert::relax::graph_lmi::{GraphLmiOpts, GraphMethod};

fn main() {
    let opts = GraphLmiOpts { method: GraphMethod::Joint, ..Default::default() };
    let bisect = BisectOpts { lo: 100.0, hi: 100000.0, rel_tol: 2e-4, ..Default::default() };
    let t0 = std::time::Instant::now();
    let res = certify_min_level(
        |level| {
            let model = parse_filter(0, None);
            let rates = uniform_rates(&model, 0.98, 0.0);
            let alpha = uniform_alpha(model.n(), level);
            Ok((model, rates, alpha))
        },
        &opts,
        &bisect,
    );
    match res {
        Ok(r) => println!("certified M = {:.4} in {:?} ({} ipm iters)", r.level, t0.elapsed(), r.solver_iterations),
        Err(e) => println!("FAILED: {e} after {:?}", t0.elapsed()),
    }
}
