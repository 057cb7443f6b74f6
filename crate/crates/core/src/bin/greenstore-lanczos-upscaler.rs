//! Reference implementation of the external upscaler protocol using the
//! native Lanczos3 upscale: `greenstore-lanczos-upscaler <in.png> <out.png>`.

use std::process::exit;

use greenstore::raster::{decode_png, encode_png, EncodeParams};
use greenstore::resample::upscale_4x;
use greenstore::store::SCALE_ENV;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [input, output] = args.as_slice() else {
        eprintln!("usage: greenstore-lanczos-upscaler <in.png> <out.png>");
        exit(1);
    };
    if let Ok(scale) = std::env::var(SCALE_ENV) {
        if scale != "4" {
            eprintln!("{SCALE_ENV}={scale} is not supported, only 4");
            exit(1);
        }
    }
    let img = match std::fs::read(input).map_err(|e| e.to_string()).and_then(|b| decode_png(&b).map_err(|e| e.to_string())) {
        Ok(img) => img,
        Err(e) => {
            eprintln!("cannot read {input}: {e}");
            exit(2);
        }
    };
    let params = EncodeParams {
        compression_effort: 1,
        palette_mode: false,
        ..EncodeParams::default()
    };
    let result = upscale_4x(&img).and_then(|big| encode_png(&big, None, &params));
    match result {
        Ok(png) => {
            if let Err(e) = std::fs::write(output, png) {
                eprintln!("cannot write {output}: {e}");
                exit(2);
            }
        }
        Err(e) => {
            eprintln!("upscale failed: {e}");
            exit(2);
        }
    }
}
