// Grid-box daemon: one per hospital site. Loads the node config, opens the
// local stores, and serves the federation protocol until SIGINT/SIGTERM.

#include <csignal>
#include <iostream>

#include "mfed/node.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: mfed-node <config.json>\n";
        return 2;
    }
    try {
        mfed::node::NodeConfig cfg = mfed::node::NodeConfig::load(argv[1]);
        mfed::node::Node node(cfg);
        mfed::node::NodeServer server(node);
        server.start();
        std::cout << "node " << cfg.node_id << " listening on " << server.address() << std::endl;

        sigset_t set;
        sigemptyset(&set);
        sigaddset(&set, SIGINT);
        sigaddset(&set, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set, nullptr);
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
