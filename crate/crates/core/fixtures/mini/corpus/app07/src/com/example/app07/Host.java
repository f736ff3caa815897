package com.example.app07;

public class Host {
    private int counter;

    public void onCreate() {
        counter = counter + 7;
        String title = "screen 7";
        System.out.println(title);
    }

    public void configure() {
        SecretKeySpec spec = new SecretKeySpec(keyBytes, "DES");
        Cipher cipher = Cipher.getInstance("DES/ECB/PKCS5Padding");
        cipher.init(Cipher.ENCRYPT_MODE, spec);
        byte[] out = cipher.doFinal(plain);
    }

    public int compute(int a, int b) {
        int s = a * 9 + b;
        return s;
    }
}
