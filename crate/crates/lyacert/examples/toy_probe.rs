// minimal loop: x := 0.9 x + 35, certified sup |x|
use lyacert::frontend::format::{parse_model, LoadOpts, LoadedModel};
use lyacert::pipeline::{certify_min_level, uniform_alpha, uniform_rates, BisectOpts};
use lyacert::relax::graph_lmi::GraphLmiOpts;

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
edge a -> t k 1 {
  guard never
}
";

fn main() {
    let bisect = BisectOpts { lo: 10.0, hi: 100000.0, rel_tol: 1e-4, ..Default::default() };
    let res = certify_min_level(
        |level| {
            let LoadedModel::Graph(model) = parse_model(GM, &LoadOpts::default()).unwrap() else { panic!() };
            let rates = uniform_rates(&model, 0.98, 0.0);
            let alpha = uniform_alpha(model.n(), level);
            Ok((model, rates, alpha))
        },
        &GraphLmiOpts::default(),
        &bisect,
    );
    match res {
        Ok(r) => println!("certified |x| <= {:.4}", r.level),
        Err(e) => println!("FAILED: {e}"),
    }
}
