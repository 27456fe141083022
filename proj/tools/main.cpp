#include <csignal>
#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  // A worker whose coordinator vanished should see EPIPE, not die silently.
  std::signal(SIGPIPE, SIG_IGN);
  return dpca::cli::cli_main(argc, argv, std::cout, std::cerr);
}
