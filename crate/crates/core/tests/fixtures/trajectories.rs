// Generated by gen_trajectories.py; do not edit.

pub const MC_PUMP_START: (f64, f64) = (-0.5, 0.0);
pub const MC_PUMP: &[(usize, f64, f64, f64, bool)] = &[
    (2, -0.49917684300416926, 0.0008231569958307428, -1.0, false),
    (2, -0.49753668667935325, 0.0016401563248160246, -1.0, false),
    (2, -0.4950917969323474, 0.002444889747005863, -1.0, false),
    (2, -0.4918604490016134, 0.0032313479307339793, -1.0, false),
    (2, -0.4878667790130396, 0.0039936699885738235, -1.0, false),
    (2, -0.4831405860490763, 0.004726192963963343, -1.0, false),
    (2, -0.47771708502858473, 0.00542350102049156, -1.0, false),
    (2, -0.47163661111360555, 0.006080473914979166, -1.0, false),
    (2, -0.46494427695930046, 0.006692334154305113, -1.0, false),
    (2, -0.4576895848965753, 0.007254692062725155, -1.0, false),
    (0, -0.45192599705666187, 0.005763587839913448, -1.0, false),
    (0, -0.44769582257109247, 0.004230174485569375, -1.0, false),
    (0, -0.4450300133860342, 0.0026658091850582386, -1.0, false),
    (0, -0.4439480287041332, 0.0010819846819010038, -1.0, false),
    (0, -0.4444577559415443, -0.0005097272374110923, -1.0, false),
    (1, -0.4455554800771298, -0.001097724135585492, -1.0, false),
    (1, -0.44723319596191835, -0.001677715884788527, -1.0, false),
    (1, -0.4494786567359156, -0.002245460773997232, -1.0, false),
    (1, -0.452275448707427, -0.0027967919715113994, -1.0, false),
    (1, -0.45560309320577813, -0.003327644498351171, -1.0, false),
];

pub const MC_LEFT_WALL_START: (f64, f64) = (-1.1, -0.04);
pub const MC_LEFT_WALL: &[(usize, f64, f64, f64, bool)] = &[
    (0, -1.138531300575228, -0.03853130057522784, -1.0, false),
    (0, -1.1756558613365045, -0.03712456076127645, -1.0, false),
    (0, -1.2, 0.0, -1.0, false),
    (0, -1.1987581039591646, 0.0012418960408353682, -1.0, false),
    (0, -1.196270205713714, 0.002487898245450696, -1.0, false),
    (0, -1.192528173202872, 0.0037420325108419024, -1.0, false),
    (0, -1.1875200116579745, 0.005008161544897544, -1.0, false),
    (0, -1.1812301149799374, 0.006289896678037213, -1.0, false),
    (0, -1.173639613080305, 0.007590501899632274, -1.0, false),
    (0, -1.1647268252899894, 0.008912787790315643, -1.0, false),
    (0, -1.1544678319750572, 0.010258993314932283, -1.0, false),
    (0, -1.1428371780811093, 0.011630653893947986, -1.0, false),
    (0, -1.1298087232406397, 0.013028454840469574, -1.0, false),
    (0, -1.1153566530398957, 0.014452070200744018, -1.0, false),
    (0, -1.099456664703654, 0.015899988336241656, -1.0, false),
    (0, -1.0820873374064657, 0.017369327297188503, -1.0, false),
    (0, -1.0632316922043448, 0.018855645202120963, -1.0, false),
    (0, -1.0428789387484478, 0.020352753455896846, -1.0, false),
    (0, -1.0210263951067677, 0.021852543641680093, -1.0, false),
    (0, -0.9976815529635055, 0.023344842143262226, -1.0, false),
];

pub const MC_GOAL_START: (f64, f64) = (0.3, 0.05);
pub const MC_GOAL: &[(usize, f64, f64, f64, bool)] = &[
    (2, 0.34944597507932335, 0.04944597507932334, -1.0, false),
    (2, 0.39864441995311867, 0.04919844487379533, -1.0, false),
    (2, 0.4479275020559331, 0.04928308210281446, -1.0, false),
    (2, 0.49764791173653744, 0.04972040968060431, -1.0, false),
    (2, 0.5481738864896801, 0.05052597475314273, -20.0, true),
];

pub const CP_BALANCE_START: [f64; 4] = [0.01, -0.02, 0.03, 0.01];
pub const CP_BALANCE: &[(usize, [f64; 4], f64, bool)] = &[
    (1, [0.009600000000000001, 0.17467915185459093, 0.030199999999999998, -0.2730686521501872], 1.0, false),
    (0, [0.01309358303709182, -0.02086040632066563, 0.024738626956996253, 0.028984390778982794], 1.0, false),
    (0, [0.012676374910678507, -0.2163282292898676, 0.025318314772575908, 0.32936882461347017], 1.0, false),
    (1, [0.008349810324881156, -0.021575677916483127, 0.03190569126484531, 0.04477641165784324], 1.0, false),
    (1, [0.007918296766551494, 0.1730745780972676, 0.032801219498002174, -0.23767169158554047], 1.0, false),
    (0, [0.011379788328496846, -0.022500254634892886, 0.028047785666291365, 0.06517458384899433], 1.0, false),
    (1, [0.010929783235798988, 0.172208572579774, 0.02935127734327125, -0.2185288167360422], 1.0, false),
    (0, [0.014373954687394469, -0.023320388006954823, 0.024980701008550404, 0.08326633400903122], 1.0, false),
    (0, [0.013907546927255373, -0.21879135748516315, 0.02664602768873103, 0.38372486964401575], 1.0, false),
    (1, [0.00953171977755211, -0.02405765551115588, 0.03432052508161135, 0.09956101296405351], 1.0, false),
    (0, [0.009050566667328994, -0.21965424362742145, 0.03631174534089242, 0.4028713710238143], 1.0, false),
    (1, [0.004657481794780565, -0.025065615166085242, 0.0443691727613687, 0.12185414450618409], 1.0, false),
    (1, [0.00415616949145886, 0.16939350189669902, 0.046806255651492386, -0.15650720834727982], 1.0, false),
    (0, [0.007544039529392841, -0.026366263183065758, 0.04367611148454679, 0.15056685640781292], 1.0, false),
    (0, [0.007016714265731526, -0.22208553051290672, 0.04668744861270305, 0.45670248060785235], 1.0, false),
    (1, [0.002575003655473391, -0.027653663818166585, 0.05582149822486009, 0.17909360172050998], 1.0, false),
    (0, [0.0020219303791100592, -0.22352815553746186, 0.05940337025927029, 0.48885069228858224], 1.0, false),
    (1, [-0.002448632731639178, -0.029292384381507275, 0.06918038410504193, 0.2154652643050653], 1.0, false),
    (0, [-0.0030344804192693237, -0.2253316486513296, 0.07348968939114324, 0.5291435826089639], 1.0, false),
    (1, [-0.007541113392295917, -0.03131633203602341, 0.08407256104332252, 0.26049264887875345], 1.0, false),
];

pub const CP_FALL_START: [f64; 4] = [0.0, 0.0, 0.15, 0.5];
pub const CP_FALL: &[(usize, [f64; 4], f64, bool)] = &[
    (1, [0.0, 0.1927243858295832, 0.16, 0.25809436286532017], 1.0, false),
    (1, [0.0038544877165916642, 0.38524346412311383, 0.1651618872573064, 0.019843785617355753], 1.0, false),
    (1, [0.011559356999053942, 0.5776590775786743, 0.16555876296965352, -0.21651484238774807], 1.0, false),
    (1, [0.023112538550627428, 0.7700749668658865, 0.16122846612189856, -0.45273993323658024], 1.0, false),
    (1, [0.038514037887945156, 0.9625936136258674, 0.15217366745716696, -0.6905766170873455], 1.0, false),
    (1, [0.05776591016046251, 1.1553132040369432, 0.13836213511542006, -0.9317487873635432], 1.0, false),
    (1, [0.08087217424120137, 1.348324238496586, 0.11972715936814919, -1.1779496933366356], 1.0, false),
    (1, [0.10783865901113308, 1.5417053145917647, 0.09616816550141648, -1.4308290112317605], 1.0, false),
    (1, [0.13867276530296838, 1.7355175956334588, 0.06755158527678126, -1.6919742600968153], 1.0, false),
    (1, [0.17338311721563754, 1.9297974574703465, 0.03371210007484496, -1.9628843346837737], 1.0, false),
    (1, [0.21197906636504446, 2.1245468028645007, -0.005545586618830513, -2.2449328880485164], 1.0, false),
    (1, [0.2544700024223345, 2.3197205786737247, -0.05044424437980084, -2.5393194441710003], 1.0, false),
    (1, [0.300864413995809, 2.5152111759612836, -0.10123063326322085, -2.8470066509173098], 1.0, false),
    (1, [0.3511686375150347, 2.7108297044877094, -0.15817076628156704, -3.1686432566651646], 1.0, false),
    (1, [0.4053852316047889, 2.9062846918126897, -0.22154363141487032, -3.504474507914609], 1.0, true),
];

