// Virtual-file-catalogue daemon: one per federation. Append-only durable log,
// compacted on startup; serves proto kinds 0x10-0x12 until SIGINT/SIGTERM.

#include <csignal>
#include <iostream>
#include <json.hpp>

#include "mfed/cat_server.hpp"
#include "mfed/net.hpp"
#include "mfed/util.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: mfed-cat <config.json>\n";
        return 2;
    }
    try {
        json cfg = json::parse(mfed::util::read_text_file(argv[1]));
        auto [host, port] = mfed::net::split_address(cfg.value("listen", "127.0.0.1:0"));
        mfed::cat::Catalogue catalogue(cfg.at("log").get<std::string>(),
                                       cfg.value("sync", true));
        mfed::proto::Roster roster =
            mfed::proto::Roster::load(cfg.at("roster").get<std::string>());
        mfed::cat::CatalogueServer server(catalogue, host, port, std::move(roster),
                                          cfg.value("server_id", "catalogue"),
                                          cfg.value("audit", ""));
        server.start();
        std::cout << "catalogue listening on " << server.address() << std::endl;

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
