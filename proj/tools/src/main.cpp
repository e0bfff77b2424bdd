#include <iostream>

#include <CLI11.hpp>

#include "codedp/errors.hpp"
#include "common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Coded-aperture dual-pixel imaging toolkit"};
  app.set_version_flag("--version", std::string("codedp ") + codedp::tool::kToolVersion);
  app.set_config("--config", "", "Read default option values from a key=value file");
  app.require_subcommand(1);

  codedp::tool::register_gen_psf(app);
  codedp::tool::register_render(app);
  codedp::tool::register_recon(app);
  codedp::tool::register_eval(app);
  codedp::tool::register_optimize_mask(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version land here too; only real argument problems are errors.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const codedp::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const codedp::StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const codedp::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const codedp::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
