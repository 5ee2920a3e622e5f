use lyacert::frontend::format::{parse_model, LoadOpts, LoadedModel};
use lyacert::pipeline::{uniform_alpha, uniform_rates};
use lyacert::relax::graph_lmi::{assemble_graph_quadratic, GraphLmiOpts};
use lyacert::solver::sdp::{solve_sdp, SdpSettings};

const GM: &str = "
model v1
vars x
scale 1
nodes s a t
start s
terminal t
init x == 0
edge s -> a k 1 {
}
edge a -> a k 1 {
  update x' = 9/10*x + 35
}
";

fn main() {
    for level in [400.0, 700.0, 1000.0, 3000.0, 10000.0, 15000.0, 16000.0] {
        let LoadedModel::Graph(model) = parse_model(GM, &LoadOpts::default()).unwrap() else { panic!() };
        let rates = uniform_rates(&model, 0.98, 0.0);
        let alpha = uniform_alpha(model.n(), level);
        let (prob, _) = assemble_graph_quadratic(&model, &rates, &alpha, &GraphLmiOpts::default()).unwrap();
        let res = solve_sdp(&prob.lower_sdp(), &SdpSettings::default());
        println!(
            "level {level}: {:?} t1={:?} iters={} margin={:.2e}",
            res.status, res.phase1_shift, res.iterations, res.min_eig_margin
        );
    }
}
