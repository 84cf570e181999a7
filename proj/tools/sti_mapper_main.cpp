#include "stimap/cli.hpp"

int main(int argc, char** argv) {
    return stimap::cli::run(argc, argv);
}
