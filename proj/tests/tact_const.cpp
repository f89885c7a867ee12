// External-denoiser stand-in: replies with a constant 0.5 image.
#include <cstdio>

#include "tacmode/tact_io.hpp"

int main(int argc, char** argv) {
    if (argc != 3) {
        std::fprintf(stderr, "usage: tact_const <request> <reply>\n");
        return 2;
    }
    try {
        const tacmode::TactRequest req = tacmode::read_tact_request(argv[1]);
        tacmode::TactileImage reply(req.image.width(), req.image.height(), 0.5f);
        tacmode::write_tact_reply(reply, argv[2]);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "tact_const: %s\n", e.what());
        return 1;
    }
    return 0;
}
