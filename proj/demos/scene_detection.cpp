// Detection on the synthetic scene with robust and plain fits.

#include <cstdio>

#include "rayreg/rayreg.hpp"

int main(int argc, char** argv) {
  rayreg::SceneConfig sc;
  if (argc > 1) sc.seed = std::stoull(argv[1]);
  const rayreg::SyntheticScene scene = rayreg::make_scene(sc);
  std::printf("scene seed %llu: %zu targets, %zu of %zu training pixels anomalous\n",
              static_cast<unsigned long long>(sc.seed), scene.truth.size(), scene.anomalous_training_pixels,
              scene.training.area());

  const rayreg::DetectorConfig dc;
  const rayreg::RobustConfig rc;
  for (rayreg::Method m : {rayreg::Method::wmle, rayreg::Method::mle}) {
    const auto r = rayreg::detect(scene.interest, scene.references, scene.training, dc, rc, scene.truth, m);
    std::printf("%-4s hits %2zu  false alarms %2zu  missed %2zu\n", std::string(rayreg::to_string(m)).c_str(),
                r.score->hits, r.score->false_alarms, r.score->missed);
  }
}
